#include "nnts/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nnts/errors.hpp"

namespace nnts::io {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\v\f");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(first, last - first + 1);
}

double reduce_degrees(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

double convert_angle(double x, AngleUnit unit, Convention convention, std::string_view source,
                     std::size_t line) {
  const bool degrees = unit == AngleUnit::degrees;
  const double half_turn = degrees ? 180.0 : kPi;
  const double to_radians = degrees ? kPi / 180.0 : 1.0;
  switch (convention) {
    case Convention::axial_mod_pi:
      return reduce_axial(reduce_degrees(x, half_turn) * to_radians);
    case Convention::leaf_double:
      return reduce_axial(reduce_degrees(2.0 * x, half_turn) * to_radians);
    case Convention::raw_0_pi:
      if (!(x >= 0.0 && x < half_turn))
        throw DataError(std::string(source) + ":" + std::to_string(line) + ": angle " +
                        format_double(x) + " is outside [0, " + (degrees ? "180" : "pi") + ")");
      return reduce_axial(x * to_radians);
  }
  return x;
}

SampleTransform transform_of(Convention convention) {
  switch (convention) {
    case Convention::axial_mod_pi:
      return SampleTransform::mod_pi;
    case Convention::leaf_double:
      return SampleTransform::doubled_leaf;
    case Convention::raw_0_pi:
      return SampleTransform::none;
  }
  return SampleTransform::none;
}

Json header(std::string_view format) {
  Json doc;
  doc["format"] = format;
  doc["version"] = kFormatVersion;
  return doc;
}

Json complex_list(std::span<const Complex> values) {
  Json list = Json::array();
  for (const auto& c : values) list.push_back(Json::array({c.real(), c.imag()}));
  return list;
}

Json params_json(const AxialParams& params) {
  Json doc = header("nnts-axial-params");
  doc["symmetric"] = false;
  doc["M"] = params.order();
  doc["v"] = complex_list(params.coefficients());
  return doc;
}

Json params_json(const SymmetricAxialParams& params) {
  Json doc = header("nnts-axial-params");
  doc["symmetric"] = true;
  doc["M"] = params.order();
  doc["v"] = complex_list(symmetric_to_general(params).coefficients());
  doc["vR"] = Json(std::vector<double>(params.real_coefficients().begin(),
                                       params.real_coefficients().end()));
  doc["mu"] = params.mu();
  return doc;
}

Json params_json(const FittedParams& params) {
  return std::visit([](const auto& p) { return params_json(p); }, params);
}

Json fit_json(const FitResult& fit) {
  const auto ic = information_criteria(fit.loglik, fit.free_params, fit.n);
  Json doc = header("nnts-axial-fit");
  doc["family"] = fit.symmetric() ? "symmetric" : "general";
  doc["M"] = fit.M;
  doc["n"] = fit.n;
  doc["free_params"] = fit.free_params;
  doc["loglik"] = fit.loglik;
  doc["aic"] = ic.aic;
  doc["bic"] = ic.bic;
  doc["converged"] = fit.converged;
  doc["starts_converged"] = fit.starts_converged;
  doc["iterations_total"] = fit.iterations_total;
  doc["best_start_index"] = fit.best_start_index;
  doc["small_sample_warning"] = fit.small_sample_warning;
  doc["density_underflow"] = fit.density_underflow;
  Json warnings = Json::array();
  if (fit.small_sample_warning)
    warnings.push_back("n = " + std::to_string(fit.n) + " is below 7M = " +
                       std::to_string(7 * fit.M) + "; the fit may be unreliable");
  if (fit.density_underflow)
    warnings.push_back("density underflow at some observation; log-likelihood was floored");
  if (!fit.converged) warnings.push_back("best start did not meet a convergence criterion");
  doc["warnings"] = std::move(warnings);
  doc["params"] = params_json(fit.params);
  return doc;
}

double require_number(const Json& value, std::string_view what) {
  if (!value.is_number()) throw DataError("parameter document: " + std::string(what) + " must be a number");
  return value.get<double>();
}

std::vector<Complex> read_complex_list(const Json& doc) {
  if (!doc.contains("v") || !doc["v"].is_array())
    throw DataError("parameter document: missing array field 'v'");
  std::vector<Complex> v;
  for (const auto& pair : doc["v"]) {
    if (!pair.is_array() || pair.size() != 2)
      throw DataError("parameter document: each entry of 'v' must be a [re, im] pair");
    v.emplace_back(require_number(pair[0], "v[k][0]"), require_number(pair[1], "v[k][1]"));
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, x);
  if (ec != std::errc{}) throw NumericalError("cannot format number");
  return std::string(buffer, end);
}

AngleUnit parse_unit(std::string_view name) {
  if (name == "radians") return AngleUnit::radians;
  if (name == "degrees") return AngleUnit::degrees;
  throw UsageError("unknown angle unit '" + std::string(name) + "'");
}

Convention parse_convention(std::string_view name) {
  if (name == "axial_mod_pi") return Convention::axial_mod_pi;
  if (name == "leaf_double") return Convention::leaf_double;
  if (name == "raw_0_pi") return Convention::raw_0_pi;
  throw UsageError("unknown angle convention '" + std::string(name) + "'");
}

const char* to_string(AngleUnit unit) {
  return unit == AngleUnit::degrees ? "degrees" : "radians";
}

const char* to_string(Convention convention) {
  switch (convention) {
    case Convention::axial_mod_pi:
      return "axial_mod_pi";
    case Convention::leaf_double:
      return "leaf_double";
    case Convention::raw_0_pi:
      return "raw_0_pi";
  }
  return "unknown";
}

AxialSample parse_angles(std::istream& in, AngleUnit unit, Convention convention,
                         std::string_view source) {
  std::vector<double> angles;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value))
      throw DataError(std::string(source) + ":" + std::to_string(line_number) +
                      ": cannot parse '" + std::string(text) + "' as an angle");
    angles.push_back(convert_angle(value, unit, convention, source, line_number));
  }
  if (angles.empty()) throw DataError(std::string(source) + ": no angles found");
  return AxialSample(std::move(angles), unit, transform_of(convention));
}

AxialSample load_angles(const DatasetSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw DataError("cannot open '" + spec.path.string() + "'");
  return parse_angles(in, spec.unit, spec.convention, spec.path.string());
}

std::string format_angles(const AxialSample& sample, std::string_view header_comment) {
  std::string out;
  if (!header_comment.empty()) out += "# " + std::string(header_comment) + "\n";
  for (double a : sample.angles()) {
    out += format_double(a);
    out += '\n';
  }
  return out;
}

std::string save_params(const AxialParams& params) { return params_json(params).dump(2) + "\n"; }

std::string save_params(const SymmetricAxialParams& params) {
  return params_json(params).dump(2) + "\n";
}

std::string save_params(const FittedParams& params) { return params_json(params).dump(2) + "\n"; }

FittedParams load_params(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("parameter document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("parameter document must be a JSON object");
  if (doc.contains("format") && doc["format"] != "nnts-axial-params")
    throw DataError("not a parameter document (format field mismatch)");
  if (!doc.contains("M") || !doc["M"].is_number_integer())
    throw DataError("parameter document: missing integer field 'M'");
  const int M = doc["M"].get<int>();
  if (M < 0) throw DataError("parameter document: M must be non-negative");

  const bool symmetric = doc.contains("symmetric") && doc["symmetric"].is_boolean() &&
                         doc["symmetric"].get<bool>();
  if (doc.contains("symmetric") && !doc["symmetric"].is_boolean())
    throw DataError("parameter document: 'symmetric' must be a boolean");

  if (symmetric) {
    if (!doc.contains("vR") || !doc["vR"].is_array())
      throw DataError("parameter document: symmetric document needs array field 'vR'");
    if (!doc.contains("mu")) throw DataError("parameter document: symmetric document needs 'mu'");
    std::vector<double> vr;
    for (const auto& x : doc["vR"]) vr.push_back(require_number(x, "vR[k]"));
    const double mu = require_number(doc["mu"], "mu");
    if (vr.size() != static_cast<std::size_t>(M) + 1)
      throw DataError("parameter document: vR must have M + 1 entries");
    double norm = 0.0;
    for (double x : vr) norm += x * x;
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kLoadNormTolerance)
      throw ParameterDomainError("parameter document: sum vR_k^2 = " + format_double(norm) +
                                 " deviates from 1 by more than 1e-6");
    if (std::abs(norm - 1.0) <= kNormTolerance) return SymmetricAxialParams(std::move(vr), mu);
    return SymmetricAxialParams::normalized(std::move(vr), mu);
  }

  auto v = read_complex_list(doc);
  if (v.size() != static_cast<std::size_t>(M) + 1)
    throw DataError("parameter document: v must have M + 1 entries");
  double norm = 0.0;
  for (const auto& c : v) norm += std::norm(c);
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kLoadNormTolerance)
    throw ParameterDomainError("parameter document: sum |v_k|^2 = " + format_double(norm) +
                               " deviates from 1 by more than 1e-6");
  if (std::abs(norm - 1.0) <= kNormTolerance) return AxialParams(std::move(v));
  return AxialParams::normalized(std::move(v));
}

std::string save_fit(const FitResult& fit) { return fit_json(fit).dump(2) + "\n"; }

std::string save_scan(const ModelScan& scan) {
  Json doc = header("nnts-axial-scan");
  doc["n"] = scan.n;
  doc["best_bic_M"] = scan.best_bic_M;
  doc["best_aic_M"] = scan.best_aic_M;
  Json rows = Json::array();
  for (const auto& row : scan.rows) {
    Json r;
    r["M"] = row.M;
    r["loglik"] = row.loglik;
    r["bic"] = row.bic;
    r["aic"] = row.aic;
    r["free_params"] = row.free_params;
    r["best_bic"] = row.M == scan.best_bic_M;
    r["best_aic"] = row.M == scan.best_aic_M;
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string format_scan_table(const ModelScan& scan) {
  std::string out = "# n = " + std::to_string(scan.n) + "\n";
  char line[128];
  std::snprintf(line, sizeof line, "%3s %12s %12s %12s\n", "M", "loglik", "BIC", "AIC");
  out += line;
  for (const auto& row : scan.rows) {
    std::snprintf(line, sizeof line, "%3d %12.2f %11.2f%c %11.2f%c\n", row.M, row.loglik,
                  row.bic, row.M == scan.best_bic_M ? '*' : ' ', row.aic,
                  row.M == scan.best_aic_M ? '*' : ' ');
    out += line;
  }
  return out;
}

std::string save_test(const LRTResult& result) {
  Json doc = header("nnts-axial-test");
  doc["kind"] = to_string(result.kind);
  doc["statistic"] = result.statistic;
  doc["df"] = result.df;
  doc["p_value"] = result.p_value;
  doc["log10_p"] = result.log10_p;
  doc["p_value_method"] = "asymptotic chi-square";
  doc["restricted_loglik"] = result.restricted_loglik;
  doc["general_loglik"] = result.general_loglik;
  const bool supplied = result.restricted_fits.empty() && result.general_fits.empty();
  doc["source"] = supplied ? "supplied-logliks" : "fits";
  Json restricted = Json::array();
  for (const auto& fit : result.restricted_fits) restricted.push_back(fit_json(fit));
  Json general = Json::array();
  for (const auto& fit : result.general_fits) general.push_back(fit_json(fit));
  doc["restricted"] = std::move(restricted);
  doc["general"] = std::move(general);
  return doc.dump(2) + "\n";
}

std::string save_moments(const AxialParams& params, int max_r) {
  if (max_r < 0) throw UsageError("max-r must be non-negative");
  Json doc = header("nnts-axial-moments");
  doc["M"] = params.order();
  Json moments = Json::array();
  for (int r = 0; r <= max_r; ++r) {
    const auto m = trig_moment(params, r);
    Json entry;
    entry["r"] = r;
    entry["re"] = m.value.real();
    entry["im"] = m.value.imag();
    entry["modulus"] = std::abs(m.value);
    moments.push_back(std::move(entry));
  }
  doc["moments"] = std::move(moments);
  const auto stats = summary_stats(params);
  doc["mean_axis"] = stats.mean_axis ? Json(*stats.mean_axis) : Json(nullptr);
  doc["axial_resultant"] = stats.axial_resultant;
  doc["circular_variance"] = stats.circular_variance;
  return doc.dump(2) + "\n";
}

std::vector<GridRow> density_grid(const AxialParams& params, int n_points) {
  if (n_points < 2) throw UsageError("density grid needs at least 2 points");
  std::vector<GridRow> rows(static_cast<std::size_t>(n_points));
  for (int j = 0; j < n_points; ++j) {
    const double theta = kPi * j / n_points;
    rows[j] = {theta, axial_density(params, theta), axial_cdf(params, theta)};
  }
  return rows;
}

std::string format_density_grid(const std::vector<GridRow>& rows) {
  std::string out = "theta,density,cdf\n";
  for (const auto& row : rows) {
    out += format_double(row.theta);
    out += ',';
    out += format_double(row.density);
    out += ',';
    out += format_double(row.cdf);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace nnts::io
