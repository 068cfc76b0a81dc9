#include "nnts/inference.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nnts/errors.hpp"

namespace nnts {

namespace {

constexpr int kMaxGammaIterations = 100000;
constexpr double kGammaEpsilon = 1e-17;

void check_gamma_arguments(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("incomplete gamma: a must be positive");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma: x must be non-negative");
}

// P(a, x) by the power series, for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double denom = a;
  for (int i = 0; i < kMaxGammaIterations; ++i) {
    denom += 1.0;
    term *= x / denom;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEpsilon)
      return std::exp(a * std::log(x) - x - std::lgamma(a)) * sum;
  }
  throw NumericalError("incomplete gamma series did not converge");
}

// log Q(a, x) by the modified Lentz continued fraction, for x >= a + 1.
double log_gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEpsilon)
      return a * std::log(x) - x - std::lgamma(a) + std::log(h);
  }
  throw NumericalError("incomplete gamma continued fraction did not converge");
}

void check_df(int df) {
  if (df < 1) throw DomainError("chi-square degrees of freedom must be at least 1");
}

InformationCriteria criteria_row(double loglik, int p, std::size_t n) {
  return information_criteria(loglik, p, n);
}

void pick_best(ModelScan& scan) {
  std::size_t best_bic = 0;
  std::size_t best_aic = 0;
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    if (scan.rows[i].bic < scan.rows[best_bic].bic) best_bic = i;
    if (scan.rows[i].aic < scan.rows[best_aic].aic) best_aic = i;
  }
  scan.best_bic_M = scan.rows[best_bic].M;
  scan.best_aic_M = scan.rows[best_aic].M;
}

}  // namespace

InformationCriteria information_criteria(double loglik, int free_params, std::size_t n) {
  if (n < 1) throw UsageError("information criteria need n >= 1");
  if (free_params < 0) throw UsageError("free parameter count must be non-negative");
  const double p = static_cast<double>(free_params);
  return {-2.0 * loglik + 2.0 * p, -2.0 * loglik + p * std::log(static_cast<double>(n))};
}

ModelScan scan_models(const AxialSample& sample, int max_order, const FitOptions& options) {
  if (max_order < 0) throw UsageError("M_max must be non-negative");
  ModelScan scan;
  scan.n = sample.size();
  std::optional<AxialParams> previous;
  for (int M = 0; M <= max_order; ++M) {
    auto fit = fit_general(sample, M, options, previous);
    previous = std::get<AxialParams>(fit.params);
    const auto ic = criteria_row(fit.loglik, fit.free_params, scan.n);
    scan.rows.push_back({M, fit.loglik, ic.aic, ic.bic, fit.free_params});
    scan.fits.push_back(std::move(fit));
  }
  pick_best(scan);
  return scan;
}

ModelScan scan_from_logliks(std::span<const double> logliks, std::size_t n) {
  if (logliks.empty()) throw UsageError("no log-likelihoods supplied");
  ModelScan scan;
  scan.n = n;
  for (std::size_t M = 0; M < logliks.size(); ++M) {
    const int p = 2 * static_cast<int>(M);
    const auto ic = criteria_row(logliks[M], p, n);
    scan.rows.push_back({static_cast<int>(M), logliks[M], ic.aic, ic.bic, p});
  }
  pick_best(scan);
  return scan;
}

double regularized_gamma_p(double a, double x) {
  check_gamma_arguments(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return -std::expm1(log_gamma_q_fraction(a, x));
}

double regularized_gamma_q(double a, double x) {
  check_gamma_arguments(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return std::exp(log_gamma_q_fraction(a, x));
}

double log_regularized_gamma_q(double a, double x) {
  check_gamma_arguments(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x < a + 1.0) return std::log1p(-gamma_p_series(a, x));
  return log_gamma_q_fraction(a, x);
}

double chi_square_sf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) throw DomainError("chi-square statistic must be non-negative");
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double chi_square_log10_sf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) throw DomainError("chi-square statistic must be non-negative");
  return log_regularized_gamma_q(0.5 * df, 0.5 * x) / std::log(10.0);
}

const char* to_string(TestKind kind) {
  switch (kind) {
    case TestKind::uniformity:
      return "uniformity";
    case TestKind::symmetry:
      return "symmetry";
    case TestKind::nested:
      return "nested";
    case TestKind::homogeneity:
      return "homogeneity";
  }
  return "unknown";
}

LRTResult lrt(double restricted_loglik, double general_loglik, int df, TestKind kind) {
  if (!std::isfinite(restricted_loglik) || !std::isfinite(general_loglik))
    throw UsageError("log-likelihoods must be finite");
  if (df < 1) throw UsageError("likelihood-ratio test needs df >= 1");
  if (general_loglik < restricted_loglik - 1e-6)
    throw UsageError("restricted log-likelihood exceeds the general one; arguments reversed?");
  LRTResult result;
  result.kind = kind;
  result.df = df;
  result.restricted_loglik = restricted_loglik;
  result.general_loglik = general_loglik;
  result.statistic = std::max(0.0, -2.0 * (restricted_loglik - general_loglik));
  result.p_value = chi_square_sf(result.statistic, df);
  result.log10_p = chi_square_log10_sf(result.statistic, df);
  return result;
}

LRTResult uniformity_test(const AxialSample& sample, int m_alt, const FitOptions& options) {
  if (m_alt < 1) throw UsageError("uniformity test needs an alternative order M >= 1");
  auto restricted = fit_general(sample, 0, options);
  auto general = fit_general(sample, m_alt, options, AxialParams::uniform());
  auto result = lrt(restricted.loglik, general.loglik, 2 * m_alt, TestKind::uniformity);
  result.restricted_fits.push_back(std::move(restricted));
  result.general_fits.push_back(std::move(general));
  return result;
}

LRTResult symmetry_test(const AxialSample& sample, int M, const FitOptions& options) {
  if (M < 2) throw UsageError("symmetry test needs M >= 2 (df = M - 1)");
  auto restricted = fit_symmetric(sample, M, options);
  auto general = fit_general(sample, M, options, restricted.general_params());
  auto result = lrt(restricted.loglik, general.loglik, M - 1, TestKind::symmetry);
  result.restricted_fits.push_back(std::move(restricted));
  result.general_fits.push_back(std::move(general));
  return result;
}

LRTResult nested_test(const AxialSample& sample, int m_restricted, int m_general,
                      const FitOptions& options) {
  if (m_restricted < 0 || m_general <= m_restricted)
    throw UsageError("nested test needs 0 <= M_restricted < M_general");
  auto restricted = fit_general(sample, m_restricted, options);
  auto general =
      fit_general(sample, m_general, options, std::get<AxialParams>(restricted.params));
  auto result = lrt(restricted.loglik, general.loglik, 2 * (m_general - m_restricted),
                    TestKind::nested);
  result.restricted_fits.push_back(std::move(restricted));
  result.general_fits.push_back(std::move(general));
  return result;
}

int homogeneity_df(std::span<const int> orders, int pooled_order) {
  if (orders.size() < 2) throw UsageError("homogeneity test needs at least two populations");
  if (pooled_order < 0) throw UsageError("pooled order must be non-negative");
  int df = -2 * pooled_order;
  for (int M : orders) {
    if (M < 0) throw UsageError("population order must be non-negative");
    df += 2 * M;
  }
  if (df < 1)
    throw UsageError("homogeneity test has " + std::to_string(df) +
                     " degrees of freedom; need sum 2M_k - 2M_pooled >= 1");
  return df;
}

LRTResult homogeneity_test(std::span<const AxialSample> samples, std::span<const int> orders,
                           int pooled_order, const FitOptions& options) {
  if (samples.size() != orders.size())
    throw UsageError("one order per population is required");
  const int df = homogeneity_df(orders, pooled_order);

  std::vector<FitResult> population_fits;
  double general = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    population_fits.push_back(fit_general(samples[k], orders[k], options));
    general += population_fits.back().loglik;
  }
  auto pooled = fit_general(concatenate(samples), pooled_order, options);
  auto result = lrt(pooled.loglik, general, df, TestKind::homogeneity);
  result.restricted_fits.push_back(std::move(pooled));
  result.general_fits = std::move(population_fits);
  return result;
}

LRTResult homogeneity_from_logliks(std::span<const double> population_logliks,
                                   std::span<const int> orders, double pooled_loglik,
                                   int pooled_order) {
  if (population_logliks.size() != orders.size())
    throw UsageError("one order per population log-likelihood is required");
  const int df = homogeneity_df(orders, pooled_order);
  const double general =
      std::accumulate(population_logliks.begin(), population_logliks.end(), 0.0);
  return lrt(pooled_loglik, general, df, TestKind::homogeneity);
}

}  // namespace nnts
