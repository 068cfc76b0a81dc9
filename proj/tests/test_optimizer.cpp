#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "nnts/core.hpp"
#include "nnts/errors.hpp"
#include "nnts/io.hpp"
#include "nnts/optimizer.hpp"
#include "oracles.hpp"

using namespace nnts;

namespace {

AxialParams generator_m2() {
  return AxialParams::normalized({Complex{0.8, 0.0}, Complex{0.3, -0.4}, Complex{-0.2, 0.25}});
}

// ||g - n v|| with g_k = sum_i conj(z_i)^k / conj(p_i), computed in long double.
long double tangent_gradient_norm(const AxialParams& params, const AxialSample& sample) {
  using C = std::complex<long double>;
  const auto v = params.coefficients();
  std::vector<C> g(v.size());
  for (double theta : sample.angles()) {
    C p{0.0L, 0.0L};
    for (std::size_t k = 0; k < v.size(); ++k)
      p += C(v[k].real(), v[k].imag()) * std::polar(1.0L, 2.0L * k * static_cast<long double>(theta));
    for (std::size_t k = 0; k < v.size(); ++k)
      g[k] += std::polar(1.0L, -2.0L * k * static_cast<long double>(theta)) / std::conj(p);
  }
  const long double n = static_cast<long double>(sample.size());
  long double s = 0.0L;
  for (std::size_t k = 0; k < v.size(); ++k) s += std::norm(g[k] - n * C(v[k].real(), v[k].imag()));
  return std::sqrt(s);
}

double mod_half_pi_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kPi / 2);
  return std::min(d, kPi / 2 - d);
}

}  // namespace

TEST_CASE("M = 0 is closed form") {
  const auto sample = sample_axial(AxialParams::uniform(), 133, 1);
  const auto fit = fit_general(sample, 0, FitOptions{});
  CHECK(fit.loglik == doctest::Approx(-133.0 * std::log(kPi)).epsilon(1e-15));
  CHECK(std::round(fit.loglik * 100.0) / 100.0 == doctest::Approx(-152.25));
  CHECK(fit.converged);
  CHECK(fit.iterations_total == 0);
  CHECK(fit.free_params == 0);
  const auto sym = fit_symmetric(sample, 0, FitOptions{});
  CHECK(sym.loglik == fit.loglik);
  CHECK(sym.free_params == 0);
}

TEST_CASE("fit options and argument validation") {
  FitOptions bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = FitOptions{};
  bad.tol_rel = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  const AxialSample s({0.1, 0.2});
  CHECK_THROWS_AS(fit_general(s, -1, FitOptions{}), UsageError);
  CHECK_THROWS_AS(fit_general(s, 1, bad), UsageError);
}

TEST_CASE("small-sample warning follows n < 7M") {
  const auto sample = sample_axial(AxialParams::uniform(), 5, 2);
  FitOptions opts;
  opts.restarts = 3;
  CHECK(fit_general(sample, 1, opts).small_sample_warning);
  CHECK_FALSE(fit_general(sample, 0, opts).small_sample_warning);
  CHECK(small_sample(20, 3));
  CHECK_FALSE(small_sample(21, 3));
}

TEST_CASE("fit invariants: recomputed loglik, free parameters, canonical phase") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const int order = 1 + trial % 3;
    const auto truth = oracle::random_params(rng, order);
    const auto sample = sample_axial(truth, 300, 100 + trial);
    FitOptions opts;
    opts.restarts = 5;
    opts.seed = trial;
    const auto fit = fit_general(sample, order, opts);
    const auto& p = std::get<AxialParams>(fit.params);
    CHECK(fit.loglik == doctest::Approx(log_likelihood(p, sample)).epsilon(1e-12));
    CHECK(fit.free_params == 2 * order);
    CHECK(fit.M == order);
    CHECK(fit.n == 300);
    CHECK(p.coefficients()[0].imag() == 0.0);
    CHECK(p.coefficients()[0].real() >= 0.0);
    CHECK(fit.loglik >= log_likelihood(truth, sample) - 1e-9);
  }
}

TEST_CASE("M = 2 round trip recovers the generator's moments") {
  const auto truth = generator_m2();
  const auto sample = sample_axial(truth, 10000, 2024);
  const auto fit = fit_general(sample, 2, FitOptions{});
  const auto& p = std::get<AxialParams>(fit.params);
  for (int r : {2, 4}) CHECK(std::abs(trig_moment(p, r).value - trig_moment(truth, r).value) < 0.05);
  CHECK(fit.loglik >= log_likelihood(truth, sample));
  CHECK(fit.converged);
}

TEST_CASE("stationarity at a converged general fit") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 4; ++trial) {
    const auto sample = sample_axial(oracle::random_params(rng, 2), 2000, 300 + trial);
    FitOptions opts;
    opts.restarts = 6;
    opts.tol_rel = 1e-300;  // leave the gradient criterion as the only stop
    const auto fit = fit_general(sample, 2, opts);
    REQUIRE(fit.converged);
    const auto norm = tangent_gradient_norm(std::get<AxialParams>(fit.params), sample);
    // Canonicalization changes only the global phase, which leaves the tangent norm unchanged.
    CHECK(norm <= opts.tol_grad * std::max<long double>(1.0L, sample.size()));
  }
}

TEST_CASE("accepted steps never decrease the log-likelihood") {
  std::mt19937_64 rng(23);
  long steps = 0;
  bool monotone = true;
  FitOptions opts;
  opts.restarts = 4;
  opts.observer = [&](const AscentStep& s) {
    ++steps;
    if (s.loglik_after < s.loglik_before) monotone = false;
  };
  for (int trial = 0; trial < 5; ++trial) {
    const auto sample = sample_axial(oracle::random_params(rng, 3), 400, 400 + trial);
    fit_general(sample, 3, opts);
    fit_symmetric(sample, 2, opts);
  }
  CHECK(steps > 0);
  CHECK(monotone);
}

TEST_CASE("nesting with the zero-padded warm start") {
  std::mt19937_64 rng(24);
  FitOptions opts;
  opts.restarts = 3;
  for (int trial = 0; trial < 5; ++trial) {
    const auto sample = sample_axial(oracle::random_params(rng, 3), 150, 500 + trial);
    double previous = fit_general(sample, 0, opts).loglik;
    std::optional<AxialParams> warm;
    for (int m = 1; m <= 4; ++m) {
      const auto fit = fit_general(sample, m, opts, warm);
      CHECK(fit.loglik >= previous - 1e-6);
      previous = fit.loglik;
      warm = std::get<AxialParams>(fit.params);
    }
  }
  const AxialSample s({0.1, 0.5});
  CHECK_THROWS_AS(fit_general(s, 1, opts, AxialParams::normalized({1.0, 1.0, 1.0})), UsageError);
}

TEST_CASE("determinism: identical inputs give identical documents") {
  const auto sample = sample_axial(generator_m2(), 500, 7);
  FitOptions opts;
  opts.seed = 7;
  CHECK(io::save_fit(fit_general(sample, 2, opts)) == io::save_fit(fit_general(sample, 2, opts)));
  CHECK(io::save_fit(fit_symmetric(sample, 2, opts)) == io::save_fit(fit_symmetric(sample, 2, opts)));
}

TEST_CASE("rotation equivariance") {
  const auto sample = sample_axial(generator_m2(), 2000, 8);
  FitOptions opts;
  opts.tol_rel = 1e-15;
  const auto base = fit_general(sample, 2, opts);
  for (double delta : {0.3, 1.7, 2.9}) {
    std::vector<double> shifted(sample.angles().begin(), sample.angles().end());
    for (auto& t : shifted) t = reduce_axial(t + delta);
    const auto moved = fit_general(AxialSample(std::move(shifted)), 2, opts);
    CHECK(moved.loglik == doctest::Approx(base.loglik).epsilon(1e-9));
    double worst = 0.0;
    for (int j = 0; j < 200; ++j) {
      const double t = kPi * j / 200.0;
      worst = std::max(worst, std::abs(axial_density(moved.general_params(), reduce_axial(t + delta)) -
                                       axial_density(base.general_params(), t)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("symmetric and general families coincide at M = 1") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    const auto sample = sample_axial(oracle::random_params(rng, 2), 200, 600 + trial);
    FitOptions opts;
    opts.restarts = 5;
    const auto general = fit_general(sample, 1, opts);
    const auto sym = fit_symmetric(sample, 1, opts);
    CHECK(sym.loglik == doctest::Approx(general.loglik).epsilon(1e-6));
    CHECK(std::abs(sym.loglik - general.loglik) < 1e-6);
    CHECK(sym.free_params == 2);
    CHECK(sym.symmetric());
  }
}

TEST_CASE("symmetric fit never beats the general fit") {
  std::mt19937_64 rng(26);
  FitOptions opts;
  opts.restarts = 6;
  for (int trial = 0; trial < 5; ++trial) {
    const int order = 2 + trial % 2;
    const auto sample = sample_axial(oracle::random_params(rng, order), 300, 700 + trial);
    const auto sym = fit_symmetric(sample, order, opts);
    const auto general = fit_general(sample, order, opts, sym.general_params());
    CHECK(sym.loglik <= general.loglik + 1e-6);
    CHECK(sym.free_params == order + 1);
    CHECK(sym.loglik == doctest::Approx(log_likelihood(std::get<SymmetricAxialParams>(sym.params), sample))
                            .epsilon(1e-12));
  }
}

TEST_CASE("symmetric fit recovers the axis of symmetry") {
  const auto truth = SymmetricAxialParams::normalized({0.7, 0.5, -0.3}, 0.4);
  const auto sample = sample_axial(symmetric_to_general(truth), 10000, 31);
  const auto fit = fit_symmetric(sample, 2, FitOptions{});
  const auto& p = std::get<SymmetricAxialParams>(fit.params);
  CHECK(mod_half_pi_distance(p.mu(), truth.mu()) < 0.05);
  CHECK(p.mu() >= 0.0);
  CHECK(p.mu() < kPi / 2);
  CHECK(fit.loglik >= log_likelihood(truth, sample) - 1e-6);
}
