#include "nnts/core.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nnts/errors.hpp"

namespace nnts {

namespace {

bool all_finite(std::span<const Complex> values) {
  return std::all_of(values.begin(), values.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

double squared_norm(std::span<const Complex> values) {
  double sum = 0.0;
  for (const auto& c : values) sum += std::norm(c);
  return sum;
}

// sum_k v_k z^k by Horner's rule.
Complex evaluate_polynomial(std::span<const Complex> coefficients, Complex z) {
  Complex acc = coefficients.back();
  for (std::size_t k = coefficients.size() - 1; k-- > 0;) acc = acc * z + coefficients[k];
  return acc;
}

// Distribution function pieces. With a_d = sum_m v_{m+d} conj(v_m),
//   pi f(theta) = s0 + 2 Re sum_{d>=1} a_d e^{i2d theta}
//   pi F(theta) = s0 theta + sum_{d>=1} Re(a_d (e^{i2d theta} - 1) / (i d)).
class CdfEvaluator {
 public:
  explicit CdfEvaluator(const AxialParams& params) : params_(params) {
    const auto v = params.coefficients();
    const int order = params.order();
    s0_ = squared_norm(v);
    lags_.resize(static_cast<std::size_t>(order));
    for (int d = 1; d <= order; ++d) {
      Complex a{0.0, 0.0};
      for (int m = 0; m + d <= order; ++m) a += v[m + d] * std::conj(v[m]);
      lags_[d - 1] = a;
    }
  }

  double cdf(double theta) const {
    if (theta <= 0.0) return 0.0;
    if (theta >= kPi) return 1.0;
    double acc = s0_ * theta;
    for (std::size_t i = 0; i < lags_.size(); ++i) {
      const double d = static_cast<double>(i + 1);
      const double s = std::sin(d * theta);
      // (e^{ix} - 1)/i = sin x + i (1 - cos x), with 1 - cos x = 2 sin^2(x/2).
      acc += (lags_[i].real() * std::sin(2.0 * d * theta) - lags_[i].imag() * 2.0 * s * s) / d;
    }
    return std::clamp(acc / (kPi * s0_), 0.0, 1.0);
  }

  double density(double theta) const { return axial_density(params_, theta); }

  double quantile(double p) const {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return kPi;
    double lo = 0.0;
    double hi = kPi;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p)
        lo = mid;
      else
        hi = mid;
    }
    double theta = 0.5 * (lo + hi);
    for (int step = 0; step < 2; ++step) {
      const double f = density(theta);
      if (!(f > 0.0)) break;
      const double next = theta - (cdf(theta) - p) / f;
      if (next < lo || next > hi) break;
      theta = next;
    }
    return theta;
  }

 private:
  const AxialParams& params_;
  double s0_ = 1.0;
  std::vector<Complex> lags_;
};

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

// Flip sign so that the first nonzero entry is positive.
void canonicalize_sign(std::vector<double>& values) {
  const auto first = std::find_if(values.begin(), values.end(), [](double x) { return x != 0.0; });
  if (first != values.end() && *first < 0.0)
    for (auto& x : values) x = -x;
}

}  // namespace

double reduce_axial(double theta) {
  double r = std::fmod(theta, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r -= kPi;
  return r;
}

std::vector<Complex> canonicalize_phase(std::vector<Complex> coefficients) {
  const auto first = std::find_if(coefficients.begin(), coefficients.end(),
                                  [](const Complex& c) { return c != Complex{0.0, 0.0}; });
  if (first == coefficients.end()) return coefficients;
  if (first->imag() == 0.0 && first->real() > 0.0) return coefficients;
  const double modulus = std::abs(*first);
  const Complex phase = std::conj(*first) / modulus;
  for (auto& c : coefficients) c *= phase;
  *first = Complex{modulus, 0.0};
  return coefficients;
}

// ---------------------------------------------------------------------------
// AxialParams

AxialParams::AxialParams(std::vector<Complex> coefficients) {
  if (coefficients.empty()) throw ParameterDomainError("coefficient vector is empty");
  if (!all_finite(coefficients)) throw ParameterDomainError("non-finite coefficient");
  const double norm = squared_norm(coefficients);
  if (std::abs(norm - 1.0) > kNormTolerance)
    throw ParameterDomainError("coefficients are not on the unit hypersphere (sum |v_k|^2 = " +
                               std::to_string(norm) + ")");
  coefficients_ = canonicalize_phase(std::move(coefficients));
}

AxialParams::AxialParams(Trusted, std::vector<Complex> coefficients)
    : coefficients_(std::move(coefficients)) {}

AxialParams AxialParams::normalized(std::vector<Complex> coefficients) {
  if (coefficients.empty()) throw ParameterDomainError("coefficient vector is empty");
  if (!all_finite(coefficients)) throw ParameterDomainError("non-finite coefficient");
  const double norm = std::sqrt(squared_norm(coefficients));
  if (!(norm > 0.0)) throw ParameterDomainError("zero coefficient vector");
  for (auto& c : coefficients) c /= norm;
  return AxialParams(Trusted{}, canonicalize_phase(std::move(coefficients)));
}

AxialParams AxialParams::uniform() { return AxialParams(Trusted{}, {Complex{1.0, 0.0}}); }

AxialParams AxialParams::padded(int order) const {
  if (order < this->order()) throw UsageError("cannot pad to a lower order");
  std::vector<Complex> v(coefficients_);
  v.resize(static_cast<std::size_t>(order) + 1, Complex{0.0, 0.0});
  return AxialParams(Trusted{}, std::move(v));
}

// ---------------------------------------------------------------------------
// SymmetricAxialParams

SymmetricAxialParams::SymmetricAxialParams(std::vector<double> real_coefficients, double mu) {
  if (real_coefficients.empty()) throw ParameterDomainError("coefficient vector is empty");
  if (!std::isfinite(mu)) throw ParameterDomainError("non-finite axis of symmetry");
  double norm = 0.0;
  for (double x : real_coefficients) {
    if (!std::isfinite(x)) throw ParameterDomainError("non-finite coefficient");
    norm += x * x;
  }
  if (std::abs(norm - 1.0) > kNormTolerance)
    throw ParameterDomainError("real coefficients are not on the unit sphere (sum vR_k^2 = " +
                               std::to_string(norm) + ")");

  mu = reduce_axial(mu);
  if (mu >= 0.5 * kPi) {
    mu -= 0.5 * kPi;
    for (std::size_t k = 1; k < real_coefficients.size(); k += 2)
      real_coefficients[k] = -real_coefficients[k];
  }
  if (real_coefficients.size() == 1) mu = 0.0;
  canonicalize_sign(real_coefficients);
  real_coefficients_ = std::move(real_coefficients);
  mu_ = mu;
}

SymmetricAxialParams SymmetricAxialParams::normalized(std::vector<double> real_coefficients,
                                                      double mu) {
  double norm = 0.0;
  for (double x : real_coefficients) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw ParameterDomainError("cannot normalize real coefficient vector");
  for (auto& x : real_coefficients) x /= norm;
  return SymmetricAxialParams(std::move(real_coefficients), mu);
}

// ---------------------------------------------------------------------------
// CircularParams

CircularParams::CircularParams(std::vector<Complex> coefficients) {
  if (coefficients.empty()) throw ParameterDomainError("coefficient vector is empty");
  if (!all_finite(coefficients)) throw ParameterDomainError("non-finite coefficient");
  const double norm = squared_norm(coefficients);
  if (std::abs(norm - 1.0 / (2.0 * kPi)) > kNormTolerance)
    throw ParameterDomainError("circular coefficients must satisfy sum |c_k|^2 = 1/(2 pi)");
  coefficients_ = canonicalize_phase(std::move(coefficients));
}

// ---------------------------------------------------------------------------
// AxialSample

AxialSample::AxialSample(std::vector<double> angles, AngleUnit source_unit,
                         SampleTransform transform)
    : angles_(std::move(angles)), source_unit_(source_unit), transform_(transform) {
  if (angles_.empty()) throw UsageError("axial sample is empty");
  for (std::size_t i = 0; i < angles_.size(); ++i) {
    const double a = angles_[i];
    if (!std::isfinite(a)) throw DataError("non-finite angle at index " + std::to_string(i));
    if (a < 0.0 || a >= kPi)
      throw DataError("angle at index " + std::to_string(i) + " is outside [0, pi)");
  }
}

AxialSample concatenate(std::span<const AxialSample> samples) {
  if (samples.empty()) throw UsageError("nothing to concatenate");
  std::vector<double> all;
  for (const auto& s : samples) all.insert(all.end(), s.angles().begin(), s.angles().end());
  return AxialSample(std::move(all), samples.front().source_unit(), samples.front().transform());
}

// ---------------------------------------------------------------------------
// Densities

double axial_density(const AxialParams& params, double theta) {
  require_finite(theta, "theta");
  const Complex z = std::polar(1.0, 2.0 * reduce_axial(theta));
  return std::norm(evaluate_polynomial(params.coefficients(), z)) / kPi;
}

double axial_density(const SymmetricAxialParams& params, double theta) {
  require_finite(theta, "theta");
  const auto vr = params.real_coefficients();
  const Complex z = std::polar(1.0, 2.0 * (theta - params.mu()));
  Complex acc{vr.back(), 0.0};
  for (std::size_t k = vr.size() - 1; k-- > 0;) acc = acc * z + vr[k];
  return std::norm(acc) / kPi;
}

double circular_density(const CircularParams& params, double phi) {
  require_finite(phi, "phi");
  const Complex z = std::polar(1.0, std::fmod(phi, 2.0 * kPi));
  return std::norm(evaluate_polynomial(params.coefficients(), z));
}

CircularParams axial_to_circular(const AxialParams& params) {
  const auto v = params.coefficients();
  const double scale = 1.0 / std::sqrt(2.0 * kPi);
  std::vector<Complex> c(2 * v.size() - 1, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < v.size(); ++k) c[2 * k] = v[k] * scale;
  return CircularParams(std::move(c));
}

double log_likelihood(const AxialParams& params, const AxialSample& sample) {
  long double sum = 0.0L;
  for (double theta : sample.angles()) sum += std::log(axial_density(params, theta));
  return static_cast<double>(sum);
}

double log_likelihood(const SymmetricAxialParams& params, const AxialSample& sample) {
  return log_likelihood(symmetric_to_general(params), sample);
}

ClampedLogLikelihood clamped_log_likelihood(const AxialParams& params,
                                            const AxialSample& sample) {
  ClampedLogLikelihood result;
  for (double theta : sample.angles()) {
    const double f = axial_density(params, theta);
    if (f < DBL_MIN) {
      result.value += std::log(DBL_MIN);
      result.underflow = true;
    } else {
      result.value += std::log(f);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Distribution function, quantile, sampling

double axial_cdf(const AxialParams& params, double theta) {
  if (!(theta >= 0.0 && theta <= kPi)) throw DomainError("axial_cdf: theta must lie in [0, pi]");
  return CdfEvaluator(params).cdf(theta);
}

double axial_quantile(const AxialParams& params, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("axial_quantile: p must lie in [0, 1]");
  return CdfEvaluator(params).quantile(p);
}

AxialSample sample_axial(const AxialParams& params, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("sample size must be at least 1");
  const CdfEvaluator evaluator(params);
  std::mt19937_64 rng(seed);
  std::vector<double> angles(n);
  for (auto& theta : angles) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    theta = reduce_axial(evaluator.quantile(u));
  }
  return AxialSample(std::move(angles));
}

// ---------------------------------------------------------------------------
// Moments

TrigMoment trig_moment(const AxialParams& params, int r) {
  if (r < 0) throw DomainError("trig_moment: r must be non-negative");
  TrigMoment moment{r, Complex{0.0, 0.0}};
  if (r == 0) {
    moment.value = Complex{1.0, 0.0};
    return moment;
  }
  if (r % 2 != 0) return moment;
  const int shift = r / 2;
  const auto v = params.coefficients();
  // Pairs (k, m) with 2(k - m) + r = 0, i.e. k = m - r/2.
  for (int m = shift; m <= params.order(); ++m) moment.value += v[m - shift] * std::conj(v[m]);
  return moment;
}

SummaryStats summary_stats(const AxialParams& params) {
  const Complex z = trig_moment(params, 2).value;
  SummaryStats stats;
  stats.axial_resultant = std::min(std::abs(z), 1.0);
  if (stats.axial_resultant < 1e-12) {
    stats.circular_variance = 1.0;
    return stats;
  }
  stats.mean_axis = reduce_axial(0.5 * std::arg(z));
  stats.circular_variance = 1.0 - stats.axial_resultant;
  return stats;
}

AxialParams symmetric_to_general(const SymmetricAxialParams& sym) {
  const auto vr = sym.real_coefficients();
  std::vector<Complex> v(vr.size());
  for (std::size_t k = 0; k < vr.size(); ++k)
    v[k] = vr[k] * std::polar(1.0, -2.0 * static_cast<double>(k) * sym.mu());
  return AxialParams(std::move(v));
}

}  // namespace nnts
