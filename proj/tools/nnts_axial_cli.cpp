// nnts-axial: command-line frontend for fitting and testing NNTS axial models.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
// Reports go to standard output (or --out); diagnostics to standard error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nnts/core.hpp"
#include "nnts/errors.hpp"
#include "nnts/inference.hpp"
#include "nnts/io.hpp"
#include "nnts/optimizer.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct InputFlags {
  std::vector<std::string> inputs;
  std::string unit = "radians";
  std::string convention = "raw_0_pi";
};

struct FitFlags {
  int restarts = 20;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_iterations = 1000;
  int mu_grid = 64;

  nnts::FitOptions options() const {
    nnts::FitOptions o;
    o.restarts = restarts;
    o.seed = seed;
    o.tol_rel = tol;
    o.max_iterations = max_iterations;
    o.mu_grid_size = mu_grid;
    return o;
  }
};

void add_input_flags(CLI::App* cmd, InputFlags& flags, bool multiple) {
  auto* opt = cmd->add_option("-i,--input", flags.inputs,
                              multiple ? "Angle files, one per population (repeatable)"
                                       : "Angle file, one angle per line");
  if (!multiple) opt->expected(1);
  cmd->add_option("--unit", flags.unit, "Angle unit of the input")
      ->check(CLI::IsMember({"radians", "degrees"}))
      ->capture_default_str();
  cmd->add_option("--convention", flags.convention, "How raw angles map to [0, pi)")
      ->check(CLI::IsMember({"axial_mod_pi", "leaf_double", "raw_0_pi"}))
      ->capture_default_str();
}

void add_fit_flags(CLI::App* cmd, FitFlags& flags) {
  cmd->add_option("--restarts", flags.restarts, "Starts per fit")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Seed for random starts")->capture_default_str();
  cmd->add_option("--tol", flags.tol, "Relative log-likelihood change tolerance")
      ->capture_default_str();
  cmd->add_option("--max-iter", flags.max_iterations, "Iterations per start")
      ->capture_default_str();
  cmd->add_option("--mu-grid", flags.mu_grid, "Axis grid size for symmetric fits")
      ->capture_default_str();
}

nnts::AxialSample load_input(const std::string& path, const InputFlags& flags) {
  return nnts::io::load_angles(
      {path, nnts::io::parse_unit(flags.unit), nnts::io::parse_convention(flags.convention)});
}

const std::string& single_input(const InputFlags& flags) {
  if (flags.inputs.size() != 1) throw nnts::UsageError("exactly one --input is required");
  return flags.inputs.front();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text << std::flush;
  else
    nnts::io::write_text_file(out_path, text);
}

nnts::AxialParams load_general_params(const std::string& path) {
  return std::visit(
      [](const auto& p) -> nnts::AxialParams {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, nnts::AxialParams>)
          return p;
        else
          return nnts::symmetric_to_general(p);
      },
      nnts::io::load_params(nnts::io::read_text_file(path)));
}

void warn_fit(const nnts::FitResult& fit) {
  if (fit.small_sample_warning)
    std::cerr << "warning: n = " << fit.n << " is below 7M = " << 7 * fit.M
              << "; the order-" << fit.M << " fit may be unreliable\n";
  if (fit.density_underflow)
    std::cerr << "warning: density underflow at some observation (M = " << fit.M << ")\n";
}

std::pair<double, double> restricted_general(const std::vector<double>& logliks) {
  if (logliks.size() != 2)
    throw nnts::UsageError("--from-logliks takes exactly two values: restricted,general");
  return {logliks[0], logliks[1]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit, compare and test NNTS densities for axial data"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version",
                       std::string("nnts-axial ") + kVersion + " (document format " +
                           std::to_string(nnts::io::kFormatVersion) + ")");

  std::string out_path;

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of one order");
  InputFlags fit_input;
  FitFlags fit_flags;
  int fit_m = 0;
  bool fit_symmetric = false;
  add_input_flags(fit_cmd, fit_input, false);
  fit_cmd->add_option("--m", fit_m, "Order M")->required()->check(CLI::NonNegativeNumber);
  fit_cmd->add_flag("--symmetric", fit_symmetric, "Fit the symmetric sub-family");
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  // scan
  auto* scan_cmd = app.add_subcommand("scan", "Fit M = 0..M_max and compare by AIC/BIC");
  InputFlags scan_input;
  FitFlags scan_flags;
  int scan_m_max = 0;
  std::string scan_format = "json";
  add_input_flags(scan_cmd, scan_input, false);
  scan_cmd->add_option("--m-max", scan_m_max, "Largest order")->required()->check(
      CLI::NonNegativeNumber);
  scan_cmd->add_option("--format", scan_format, "json or table")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  add_fit_flags(scan_cmd, scan_flags);
  scan_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  // test
  auto* test_cmd = app.add_subcommand("test", "Likelihood-ratio tests");
  test_cmd->require_subcommand(1);
  InputFlags test_input;
  FitFlags test_flags;
  int test_m = -1;
  int test_m_restricted = -1;
  int test_m_pooled = -1;
  std::vector<int> test_m_per;
  std::vector<double> from_logliks;
  std::optional<double> pooled_loglik;

  auto add_test_common = [&](CLI::App* cmd, bool multiple) {
    add_input_flags(cmd, test_input, multiple);
    add_fit_flags(cmd, test_flags);
    cmd->add_option("--out", out_path, "Write the report here instead of stdout");
  };
  auto* uni_cmd = test_cmd->add_subcommand("uniformity", "Uniform (M = 0) vs order --m");
  add_test_common(uni_cmd, false);
  uni_cmd->add_option("--m", test_m, "Alternative order")->required();
  uni_cmd->add_option("--from-logliks", from_logliks, "restricted,general log-likelihoods")
      ->delimiter(',');

  auto* sym_cmd = test_cmd->add_subcommand("symmetry", "Symmetric vs general, order --m");
  add_test_common(sym_cmd, false);
  sym_cmd->add_option("--m", test_m, "Order")->required();
  sym_cmd->add_option("--from-logliks", from_logliks, "restricted,general log-likelihoods")
      ->delimiter(',');

  auto* nested_cmd = test_cmd->add_subcommand("nested", "Order --m-restricted vs order --m");
  add_test_common(nested_cmd, false);
  nested_cmd->add_option("--m", test_m, "General order")->required();
  nested_cmd->add_option("--m-restricted", test_m_restricted, "Restricted order")->required();
  nested_cmd->add_option("--from-logliks", from_logliks, "restricted,general log-likelihoods")
      ->delimiter(',');

  auto* homo_cmd = test_cmd->add_subcommand("homogeneity", "Separate fits vs one pooled fit");
  add_test_common(homo_cmd, true);
  homo_cmd->add_option("--m-per", test_m_per, "Order per population")
      ->required()
      ->delimiter(',');
  homo_cmd->add_option("--m-pooled", test_m_pooled, "Order of the pooled model")->required();
  homo_cmd->add_option("--from-logliks", from_logliks, "Population log-likelihoods")
      ->delimiter(',');
  homo_cmd->add_option("--pooled-loglik", pooled_loglik,
                       "Pooled log-likelihood (with --from-logliks)");

  // density / moments / sample
  std::string params_path;
  auto* density_cmd = app.add_subcommand("density", "Density and CDF on a uniform grid");
  int grid = 360;
  density_cmd->add_option("--params", params_path, "Parameter document")->required();
  density_cmd->add_option("--grid", grid, "Number of grid points on [0, pi)")
      ->capture_default_str();
  density_cmd->add_option("--out", out_path, "Write the grid here instead of stdout");

  auto* moments_cmd = app.add_subcommand("moments", "Trigonometric moments and summaries");
  int max_r = 4;
  moments_cmd->add_option("--params", params_path, "Parameter document")->required();
  moments_cmd->add_option("--max-r", max_r, "Largest moment order")->capture_default_str();
  moments_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  auto* sample_cmd = app.add_subcommand("sample", "Draw an angle file from a fitted density");
  std::size_t sample_n = 100;
  std::uint64_t sample_seed = 0;
  sample_cmd->add_option("--params", params_path, "Parameter document")->required();
  sample_cmd->add_option("--n", sample_n, "Number of draws")->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--out", out_path, "Write the angles here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*fit_cmd) {
      const auto sample = load_input(single_input(fit_input), fit_input);
      const auto options = fit_flags.options();
      const auto fit = fit_symmetric ? nnts::fit_symmetric(sample, fit_m, options)
                                     : nnts::fit_general(sample, fit_m, options);
      warn_fit(fit);
      emit(nnts::io::save_fit(fit), out_path);
      if (fit.starts_converged == 0) {
        std::cerr << "error: no start converged within " << options.max_iterations
                  << " iterations\n";
        return kNumerical;
      }
      return kOk;
    }

    if (*scan_cmd) {
      const auto sample = load_input(single_input(scan_input), scan_input);
      const auto scan = nnts::scan_models(sample, scan_m_max, scan_flags.options());
      for (const auto& fit : scan.fits) warn_fit(fit);
      emit(scan_format == "table" ? nnts::io::format_scan_table(scan) : nnts::io::save_scan(scan),
           out_path);
      return kOk;
    }

    if (*test_cmd) {
      const auto options = test_flags.options();
      const bool supplied = !from_logliks.empty();
      nnts::LRTResult result;
      if (*uni_cmd) {
        if (supplied) {
          const auto [r, g] = restricted_general(from_logliks);
          if (test_m < 1) throw nnts::UsageError("uniformity test needs --m >= 1");
          result = nnts::lrt(r, g, 2 * test_m, nnts::TestKind::uniformity);
        } else {
          result = nnts::uniformity_test(load_input(single_input(test_input), test_input), test_m,
                                         options);
        }
      } else if (*sym_cmd) {
        if (supplied) {
          const auto [r, g] = restricted_general(from_logliks);
          if (test_m < 2) throw nnts::UsageError("symmetry test needs --m >= 2 (df = M - 1)");
          result = nnts::lrt(r, g, test_m - 1, nnts::TestKind::symmetry);
        } else {
          result = nnts::symmetry_test(load_input(single_input(test_input), test_input), test_m,
                                       options);
        }
      } else if (*nested_cmd) {
        if (supplied) {
          const auto [r, g] = restricted_general(from_logliks);
          if (test_m_restricted < 0 || test_m <= test_m_restricted)
            throw nnts::UsageError("nested test needs 0 <= --m-restricted < --m");
          result = nnts::lrt(r, g, 2 * (test_m - test_m_restricted), nnts::TestKind::nested);
        } else {
          result = nnts::nested_test(load_input(single_input(test_input), test_input),
                                     test_m_restricted, test_m, options);
        }
      } else if (*homo_cmd) {
        if (supplied) {
          if (!pooled_loglik) throw nnts::UsageError("--from-logliks needs --pooled-loglik");
          result = nnts::homogeneity_from_logliks(from_logliks, test_m_per, *pooled_loglik,
                                                  test_m_pooled);
        } else {
          nnts::homogeneity_df(test_m_per, test_m_pooled);
          if (test_input.inputs.size() != test_m_per.size())
            throw nnts::UsageError("give one --input per --m-per entry");
          std::vector<nnts::AxialSample> samples;
          for (const auto& path : test_input.inputs) samples.push_back(load_input(path, test_input));
          result = nnts::homogeneity_test(samples, test_m_per, test_m_pooled, options);
        }
      }
      for (const auto& fit : result.restricted_fits) warn_fit(fit);
      for (const auto& fit : result.general_fits) warn_fit(fit);
      emit(nnts::io::save_test(result), out_path);
      return kOk;
    }

    if (*density_cmd) {
      const auto params = load_general_params(params_path);
      emit(nnts::io::format_density_grid(nnts::io::density_grid(params, grid)), out_path);
      return kOk;
    }

    if (*moments_cmd) {
      emit(nnts::io::save_moments(load_general_params(params_path), max_r), out_path);
      return kOk;
    }

    if (*sample_cmd) {
      const auto params = load_general_params(params_path);
      const auto sample = nnts::sample_axial(params, sample_n, sample_seed);
      emit(nnts::io::format_angles(sample, "nnts-axial sample: n=" + std::to_string(sample_n) +
                                               " seed=" + std::to_string(sample_seed) +
                                               " unit=radians convention=raw_0_pi"),
           out_path);
      return kOk;
    }

    std::cerr << app.help();
    return kUsage;
  } catch (const nnts::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nnts::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nnts::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const nnts::ParameterDomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const nnts::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
