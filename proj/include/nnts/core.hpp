#pragma once

// NNTS densities for axial data (undirected directions on [0, pi)).
//
// An axial density of order M is
//
//   f(theta) = (1/pi) | sum_{k=0}^{M} v_k exp(i 2k theta) |^2,
//
// with the complex coefficient vector v on the unit complex hypersphere.
// All angles handled here are in radians; degrees live at the I/O boundary.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nnts {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Tolerance on sum |v_k|^2 = 1 for directly constructed parameters.
inline constexpr double kNormTolerance = 1e-12;

/// Reduces an angle to the canonical axial support [0, pi).
double reduce_axial(double theta);

/// Parameters of an NNTS axial density. Immutable; always on the unit
/// hypersphere with a canonical global phase (first nonzero coefficient
/// real and positive, which is v_0 whenever v_0 != 0).
class AxialParams {
 public:
  /// Throws ParameterDomainError unless every coefficient is finite and the
  /// squared norm is within kNormTolerance of 1. The phase is canonicalized.
  explicit AxialParams(std::vector<Complex> coefficients);

  /// Rescales a nonzero finite vector onto the unit sphere, then canonicalizes.
  static AxialParams normalized(std::vector<Complex> coefficients);

  /// M = 0, the uniform axial density.
  static AxialParams uniform();

  int order() const { return static_cast<int>(coefficients_.size()) - 1; }
  std::span<const Complex> coefficients() const { return coefficients_; }
  int free_parameters() const { return 2 * order(); }

  /// Same density with order raised to `order` by appending zero coefficients.
  AxialParams padded(int order) const;

  friend bool operator==(const AxialParams&, const AxialParams&) = default;

 private:
  struct Trusted {};
  AxialParams(Trusted, std::vector<Complex> coefficients);

  std::vector<Complex> coefficients_;
};

/// Multiplies by the unit phase that makes the first nonzero coefficient real
/// and positive. Idempotent bit for bit.
std::vector<Complex> canonicalize_phase(std::vector<Complex> coefficients);

/// Symmetric sub-family: real coefficients vR and an axis of symmetry mu,
/// v_k = vR_k exp(-i 2k mu).
///
/// A period-pi density symmetric about mu is also symmetric about
/// mu + pi/2, and (vR, mu) describes the same density as
/// ((-1)^k vR, mu - pi/2). The stored representative has mu in [0, pi/2)
/// and a positive first nonzero coefficient.
class SymmetricAxialParams {
 public:
  SymmetricAxialParams(std::vector<double> real_coefficients, double mu);

  static SymmetricAxialParams normalized(std::vector<double> real_coefficients, double mu);

  int order() const { return static_cast<int>(real_coefficients_.size()) - 1; }
  std::span<const double> real_coefficients() const { return real_coefficients_; }
  double mu() const { return mu_; }

  /// M + 1 for M >= 1. The order-0 member is the uniform density, which has
  /// no free parameter.
  int free_parameters() const { return order() == 0 ? 0 : order() + 1; }

  friend bool operator==(const SymmetricAxialParams&, const SymmetricAxialParams&) = default;

 private:
  std::vector<double> real_coefficients_;
  double mu_ = 0.0;
};

/// Circular NNTS parameters, sum |c_k|^2 = 1/(2 pi), density |sum c_k e^{ik phi}|^2.
class CircularParams {
 public:
  explicit CircularParams(std::vector<Complex> coefficients);

  int order() const { return static_cast<int>(coefficients_.size()) - 1; }
  std::span<const Complex> coefficients() const { return coefficients_; }

 private:
  std::vector<Complex> coefficients_;
};

enum class AngleUnit { radians, degrees };
enum class SampleTransform { none, mod_pi, doubled_leaf };

/// Non-empty set of axial observations, every angle in [0, pi).
class AxialSample {
 public:
  explicit AxialSample(std::vector<double> angles, AngleUnit source_unit = AngleUnit::radians,
                       SampleTransform transform = SampleTransform::none);

  std::span<const double> angles() const { return angles_; }
  std::size_t size() const { return angles_.size(); }
  AngleUnit source_unit() const { return source_unit_; }
  SampleTransform transform() const { return transform_; }

 private:
  std::vector<double> angles_;
  AngleUnit source_unit_;
  SampleTransform transform_;
};

/// Concatenation in argument order; provenance of the first sample is kept.
AxialSample concatenate(std::span<const AxialSample> samples);

struct TrigMoment {
  int r = 0;
  Complex value;
};

struct SummaryStats {
  std::optional<double> mean_axis;  // empty when the resultant vanishes
  double axial_resultant = 0.0;
  double circular_variance = 1.0;
};

double axial_density(const AxialParams& params, double theta);
double axial_density(const SymmetricAxialParams& params, double theta);

double circular_density(const CircularParams& params, double phi);

/// Embeds an axial density as a circular density of the undoubled angle:
/// c_{2k} = v_k / sqrt(2 pi), odd coefficients zero.
CircularParams axial_to_circular(const AxialParams& params);

/// Sum of log densities. A density that is exactly zero at an observation
/// yields -infinity.
double log_likelihood(const AxialParams& params, const AxialSample& sample);
double log_likelihood(const SymmetricAxialParams& params, const AxialSample& sample);

/// Log-likelihood where each log density is floored at log(DBL_MIN).
struct ClampedLogLikelihood {
  double value = 0.0;
  bool underflow = false;
};
ClampedLogLikelihood clamped_log_likelihood(const AxialParams& params, const AxialSample& sample);

/// Closed-form distribution function on [0, pi].
double axial_cdf(const AxialParams& params, double theta);

/// Inverse of axial_cdf by bisection to width 1e-12 plus two Newton steps.
double axial_quantile(const AxialParams& params, double p);

/// n inverse-CDF draws from a 64-bit Mersenne twister seeded with `seed`.
AxialSample sample_axial(const AxialParams& params, std::size_t n, std::uint64_t seed);

/// E[exp(i r theta)]; zero for odd r and for r > 2M.
TrigMoment trig_moment(const AxialParams& params, int r);

SummaryStats summary_stats(const AxialParams& params);

AxialParams symmetric_to_general(const SymmetricAxialParams& sym);

}  // namespace nnts
