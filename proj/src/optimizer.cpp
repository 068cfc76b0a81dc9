#include "nnts/optimizer.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnts/errors.hpp"

namespace nnts {

namespace {

constexpr double kStartEpsilon = 0.01;
constexpr int kMaxHalvings = 50;
constexpr double kGoldenWidth = 1e-6;
const double kLogPi = std::log(kPi);
const double kLogFloor = std::log(DBL_MIN * kPi);  // floors |p|^2 so that f >= DBL_MIN

using Vector = std::vector<Complex>;

double norm2(const Vector& v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return s;
}

Vector retract(const Vector& v, const Vector& direction, double step) {
  Vector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k] + step * direction[k];
  const double scale = 1.0 / std::sqrt(norm2(out));
  for (auto& c : out) c *= scale;
  return out;
}

// Log-likelihood and gradient for one (possibly de-rotated) data set.
class LikelihoodSurface {
 public:
  LikelihoodSurface(std::span<const double> angles, double shift) : rotations_(angles.size()) {
    for (std::size_t i = 0; i < angles.size(); ++i)
      rotations_[i] = std::polar(1.0, 2.0 * (angles[i] - shift));
  }

  std::size_t size() const { return rotations_.size(); }

  struct Value {
    long double loglik = 0.0L;
    bool underflow = false;
  };

  // The loglik is evaluated in extended precision: near a maximum the ascent
  // has to resolve changes far below the rounding of a double sum.
  Value value(const Vector& v) const {
    Value out;
    for (const auto& z : rotations_) accumulate(out, evaluate(v, z).q);
    out.loglik -= static_cast<long double>(rotations_.size()) * kLogPi;
    return out;
  }

  Value value_and_gradient(const Vector& v, Vector& gradient) const {
    Value out;
    gradient.assign(v.size(), Complex{0.0, 0.0});
    for (const auto& z : rotations_) {
      const auto e = evaluate(v, z);
      if (!accumulate(out, e.q)) continue;
      // u_k / conj(p) with u_k = conj(z)^k.
      const double q = static_cast<double>(e.q);
      Complex term{static_cast<double>(e.re) / q, static_cast<double>(e.im) / q};
      const Complex zc = std::conj(z);
      for (auto& g : gradient) {
        g += term;
        term *= zc;
      }
    }
    out.loglik -= static_cast<long double>(rotations_.size()) * kLogPi;
    return out;
  }

  // Second-order model of the loglik on the horizontal tangent space spanned
  // by `basis` (and i * basis unless real_only), from the scale-invariant
  // extension sum log |p_i|^2 - n log |v|^2. Fills the Hessian `h`
  // (row-major, dim x dim) and the gradient `b` in basis coordinates.
  void newton_system(const Vector& v, const Vector& gradient, const std::vector<Vector>& basis,
                     bool real_only, std::vector<double>& h, std::vector<double>& b) const {
    const std::size_t m = basis.size();
    const std::size_t dim = real_only ? m : 2 * m;
    std::vector<Complex> s(m * m, Complex{0.0, 0.0});
    std::vector<Complex> d(m);
    for (const auto& z : rotations_) {
      const Complex p = evaluate_double(v, z);
      if (std::norm(p) < DBL_MIN) continue;
      for (std::size_t j = 0; j < m; ++j) d[j] = evaluate_double(basis[j], z) / p;
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = j; l < m; ++l) s[j * m + l] += d[j] * d[l];
    }
    const double n = static_cast<double>(rotations_.size());
    h.assign(dim * dim, 0.0);
    b.assign(dim, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      Complex gu{0.0, 0.0};
      for (std::size_t k = 0; k < v.size(); ++k) gu += std::conj(gradient[k]) * basis[j][k];
      b[j] = 2.0 * gu.real();
      if (!real_only) b[m + j] = -2.0 * gu.imag();
      for (std::size_t l = 0; l < m; ++l) {
        const Complex sjl = j <= l ? s[j * m + l] : s[l * m + j];
        const double diag = j == l ? 2.0 * n : 0.0;
        h[j * dim + l] = -2.0 * sjl.real() - diag;
        if (!real_only) {
          h[j * dim + m + l] = 2.0 * sjl.imag();
          h[(m + j) * dim + l] = 2.0 * sjl.imag();
          h[(m + j) * dim + m + l] = 2.0 * sjl.real() - diag;
        }
      }
    }
  }

 private:
  static Complex evaluate_double(const Vector& v, Complex z) {
    Complex acc = v.back();
    for (std::size_t k = v.size() - 1; k-- > 0;) acc = acc * z + v[k];
    return acc;
  }

  struct Evaluation {
    long double re, im, q;
  };

  static Evaluation evaluate(const Vector& v, Complex z) {
    const long double zr = z.real(), zi = z.imag();
    long double re = v.back().real(), im = v.back().imag();
    for (std::size_t k = v.size() - 1; k-- > 0;) {
      const long double r = re * zr - im * zi + v[k].real();
      im = re * zi + im * zr + v[k].imag();
      re = r;
    }
    return {re, im, re * re + im * im};
  }

  // Returns false when the term was floored (and contributes no gradient).
  static bool accumulate(Value& out, long double q) {
    const long double lq = q > 0.0L ? std::log(q) : -INFINITY;
    if (lq < kLogFloor) {
      out.loglik += kLogFloor;
      out.underflow = true;
      return false;
    }
    out.loglik += lq;
    return true;
  }

  std::vector<Complex> rotations_;
};

struct AscentOutcome {
  Vector v;
  long double loglik = -INFINITY;
  int iterations = 0;
  bool converged = false;
  bool underflow = false;
};

// Orthonormal basis of the complement of v under the complex inner product:
// the trailing columns of the unitary factor of a QR decomposition of v.
// When v is real the Householder reflector, and so the basis, is real.
std::vector<Vector> tangent_basis(const Vector& v) {
  const Eigen::Map<const Eigen::VectorXcd> column(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(column);
  const Eigen::MatrixXcd q = qr.householderQ();
  std::vector<Vector> basis;
  for (Eigen::Index j = 1; j < q.cols(); ++j) basis.emplace_back(q.col(j).begin(), q.col(j).end());
  return basis;
}

// Modified Newton direction: -H^{-1} b, with H shifted until negative definite.
std::optional<Vector> newton_direction(const LikelihoodSurface& surface, const Vector& v,
                                       const Vector& gradient, bool real_only) {
  const auto basis = tangent_basis(v);
  if (basis.empty()) return std::nullopt;
  std::vector<double> h, b;
  surface.newton_system(v, gradient, basis, real_only, h, b);
  const auto dim = static_cast<Eigen::Index>(b.size());
  const Eigen::MatrixXd negated = -Eigen::Map<const Eigen::MatrixXd>(h.data(), dim, dim);
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), dim);
  const double scale = static_cast<double>(std::max<std::size_t>(surface.size(), 1));
  Eigen::VectorXd y;
  bool solved = false;
  for (double shift = 0.0; !solved && shift < 1e6 * scale;
       shift = shift == 0.0 ? 1e-6 * scale : 10.0 * shift) {
    const Eigen::LLT<Eigen::MatrixXd> llt(negated + shift * Eigen::MatrixXd::Identity(dim, dim));
    if (llt.info() != Eigen::Success) continue;
    y = llt.solve(rhs);
    solved = y.allFinite();
  }
  if (!solved) return std::nullopt;
  const std::size_t m = basis.size();
  Vector delta(v.size(), Complex{0.0, 0.0});
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < v.size(); ++k) {
      delta[k] += y[static_cast<Eigen::Index>(j)] * basis[j][k];
      if (!real_only) delta[k] += Complex{0.0, y[static_cast<Eigen::Index>(m + j)]} * basis[j][k];
    }
  return delta;
}

// Monotone projected ascent from `start` (already on the sphere). With
// `real_only` the iterate stays on the real unit sphere.
AscentOutcome ascend(const LikelihoodSurface& surface, Vector start, const FitOptions& options,
                     int start_index, bool real_only) {
  const double n = static_cast<double>(surface.size());
  const double grad_threshold = options.tol_grad * std::max(1.0, n);

  AscentOutcome out;
  out.v = std::move(start);
  Vector gradient;
  auto current = surface.value_and_gradient(out.v, gradient);
  Vector direction(out.v.size());
  double previous_tangent = INFINITY;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double tangent_norm2 = 0.0;
    for (std::size_t k = 0; k < direction.size(); ++k) {
      direction[k] = gradient[k] / n - out.v[k];
      if (real_only) direction[k] = Complex{direction[k].real(), 0.0};
      tangent_norm2 += std::norm(direction[k]);
    }
    const double tangent_norm = n * std::sqrt(tangent_norm2);
    if (tangent_norm < grad_threshold) {
      out.converged = true;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    Vector candidate;
    LikelihoodSurface::Value trial;
    auto line_search = [&](const Vector& d) {
      step = 1.0;
      for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
        candidate = retract(out.v, d, step);
        trial = surface.value(candidate);
        if (trial.loglik >= current.loglik) return true;
      }
      return false;
    };
    if (const auto newton = newton_direction(surface, out.v, gradient, real_only))
      accepted = line_search(*newton);
    if (!accepted) accepted = line_search(direction);
    if (!accepted) {
      // No ascent possible at working precision: the relative change is zero.
      out.converged = true;
      break;
    }

    const long double before = current.loglik;
    if (options.observer)
      options.observer(AscentStep{start_index, iter + 1, static_cast<double>(before),
                                  static_cast<double>(trial.loglik), step, tangent_norm});
    out.v = std::move(candidate);
    ++out.iterations;

    current = surface.value_and_gradient(out.v, gradient);
    if (current.loglik < before)
      throw NumericalError("ascent produced a decreasing log-likelihood at iteration " +
                           std::to_string(iter + 1));

    // An unchanged loglik is below working precision; keep going while the
    // gradient still contracts.
    const long double change = (current.loglik - before) / std::max(1.0L, std::abs(before));
    const bool resolved = current.loglik != before || tangent_norm > 0.9 * previous_tangent;
    if (change < options.tol_rel && resolved) {
      out.converged = true;
      break;
    }
    previous_tangent = tangent_norm;
  }
  out.loglik = current.loglik;
  out.underflow = current.underflow;
  return out;
}

std::mt19937_64 start_rng(std::uint64_t seed, int stream, int index, int order) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(order)};
  return std::mt19937_64(seq);
}

Vector random_start(std::mt19937_64& rng, int order, bool real_only) {
  std::normal_distribution<double> normal;
  Vector v(static_cast<std::size_t>(order) + 1);
  for (auto& c : v) {
    const double re = normal(rng);
    c = Complex{re, real_only ? 0.0 : normal(rng)};
  }
  const double scale = 1.0 / std::sqrt(norm2(v));
  for (auto& c : v) c *= scale;
  return v;
}

Vector deterministic_start(int order) {
  Vector v(static_cast<std::size_t>(order) + 1, Complex{kStartEpsilon, 0.0});
  v[0] = Complex{1.0, 0.0};
  const double scale = 1.0 / std::sqrt(norm2(v));
  for (auto& c : v) c *= scale;
  return v;
}

// Highest log-likelihood wins; on exact ties the earlier start is kept.
bool better(const AscentOutcome& candidate, const AscentOutcome& incumbent) {
  return candidate.loglik > incumbent.loglik;
}

void check_fit_arguments(const AxialSample& sample, int M, const FitOptions& options) {
  options.validate();
  if (M < 0) throw UsageError("model order M must be non-negative");
  if (sample.size() == 0) throw UsageError("cannot fit an empty sample");
}

FitResult uniform_fit(const AxialSample& sample, bool symmetric) {
  FitResult result;
  result.n = sample.size();
  result.M = 0;
  if (symmetric)
    result.params = SymmetricAxialParams({1.0}, 0.0);
  else
    result.params = AxialParams::uniform();
  result.loglik = -static_cast<double>(sample.size()) * kLogPi;
  result.free_params = 0;
  result.converged = true;
  result.starts_converged = 1;
  return result;
}

}  // namespace

void FitOptions::validate() const {
  if (restarts < 1) throw UsageError("restarts must be at least 1");
  if (max_iterations < 1) throw UsageError("max_iterations must be at least 1");
  if (mu_grid_size < 1) throw UsageError("mu_grid_size must be at least 1");
  if (!(tol_rel > 0.0)) throw UsageError("tol_rel must be positive");
  if (!(tol_grad > 0.0)) throw UsageError("tol_grad must be positive");
}

AxialParams FitResult::general_params() const {
  if (const auto* sym = std::get_if<SymmetricAxialParams>(&params))
    return symmetric_to_general(*sym);
  return std::get<AxialParams>(params);
}

bool small_sample(std::size_t n, int M) { return n < 7 * static_cast<std::size_t>(M); }

FitResult fit_general(const AxialSample& sample, int M, const FitOptions& options,
                      const std::optional<AxialParams>& warm_start) {
  check_fit_arguments(sample, M, options);
  if (warm_start && warm_start->order() > M)
    throw UsageError("warm start order exceeds the fitted order");
  if (M == 0) return uniform_fit(sample, false);

  const LikelihoodSurface surface(sample.angles(), 0.0);
  const int starts = std::max(options.restarts, warm_start ? 2 : 1);

  AscentOutcome best;
  FitResult result;
  for (int s = 0; s < starts; ++s) {
    Vector start;
    if (s == 0) {
      start = deterministic_start(M);
    } else if (s == 1 && warm_start) {
      const auto padded = warm_start->padded(M);
      start.assign(padded.coefficients().begin(), padded.coefficients().end());
    } else {
      auto rng = start_rng(options.seed, 0, s, M);
      start = random_start(rng, M, false);
    }
    auto outcome = ascend(surface, std::move(start), options, s, false);
    result.iterations_total += outcome.iterations;
    if (outcome.converged) ++result.starts_converged;
    if (s == 0 || better(outcome, best)) {
      best = std::move(outcome);
      result.best_start_index = s;
    }
  }

  const auto params = AxialParams::normalized(best.v);
  result.params = params;
  result.loglik = log_likelihood(params, sample);
  result.M = M;
  result.n = sample.size();
  result.free_params = params.free_parameters();
  result.converged = best.converged;
  result.small_sample_warning = small_sample(sample.size(), M);
  result.density_underflow = best.underflow || !std::isfinite(result.loglik);
  if (!std::isfinite(result.loglik)) result.loglik = clamped_log_likelihood(params, sample).value;
  return result;
}

namespace {

struct ProfilePoint {
  double mu = 0.0;
  AscentOutcome outcome;
};

class SymmetricProfiler {
 public:
  SymmetricProfiler(const AxialSample& sample, int M, const FitOptions& options)
      : sample_(sample), M_(M), options_(options) {}

  // Profile log-likelihood at mu: best real-restricted ascent over `starts`.
  ProfilePoint evaluate(double mu, const std::vector<Vector>& starts, int random_starts,
                        int stream) {
    const LikelihoodSurface surface(sample_.angles(), mu);
    ProfilePoint point{mu, {}};
    int index = 0;
    auto consider = [&](Vector start) {
      auto outcome = ascend(surface, std::move(start), options_, index, true);
      iterations_ += outcome.iterations;
      ++ascents_;
      if (outcome.converged) ++converged_;
      if (index == 0 || better(outcome, point.outcome)) point.outcome = std::move(outcome);
      ++index;
    };
    for (const auto& s : starts) consider(s);
    for (int r = 0; r < random_starts; ++r) {
      auto rng = start_rng(options_.seed, stream, r, M_);
      consider(random_start(rng, M_, true));
    }
    if (!best_ || point.outcome.loglik > best_->outcome.loglik) best_ = point;
    return point;
  }

  const ProfilePoint& best() const { return *best_; }
  long iterations() const { return iterations_; }
  int ascents() const { return ascents_; }
  int converged() const { return converged_; }

 private:
  const AxialSample& sample_;
  int M_;
  const FitOptions& options_;
  std::optional<ProfilePoint> best_;
  long iterations_ = 0;
  int ascents_ = 0;
  int converged_ = 0;
};

}  // namespace

FitResult fit_symmetric(const AxialSample& sample, int M, const FitOptions& options) {
  check_fit_arguments(sample, M, options);
  if (M == 0) return uniform_fit(sample, true);

  SymmetricProfiler profiler(sample, M, options);
  const Vector initial = deterministic_start(M);
  const int grid = options.mu_grid_size;
  const double spacing = kPi / grid;

  // Grid pass: deterministic start, continuation from the previous grid
  // point, and one random start per point.
  std::optional<Vector> previous;
  const int grid_random = options.restarts >= 3 ? 1 : 0;
  for (int j = 0; j < grid; ++j) {
    std::vector<Vector> starts{initial};
    if (previous) starts.push_back(*previous);
    const auto point = profiler.evaluate(j * spacing, starts, grid_random, 1 + j);
    previous = point.outcome.v;
  }

  // Golden-section refinement inside the best grid cell.
  const double centre = profiler.best().mu;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = centre - spacing;
  double b = centre + spacing;
  auto probe = [&](double mu) {
    return profiler.evaluate(mu, {initial, profiler.best().outcome.v}, 0, 0).outcome.loglik;
  };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = probe(c);
  double fd = probe(d);
  while (b - a > kGoldenWidth) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = probe(d);
    }
  }

  // Final polish with the full restart budget at the best axis found.
  const double mu_best = profiler.best().mu;
  std::vector<Vector> polish{initial, profiler.best().outcome.v};
  profiler.evaluate(mu_best, polish, std::max(0, options.restarts - 2), 1 + grid);

  const auto& best = profiler.best();
  std::vector<double> real(best.outcome.v.size());
  for (std::size_t k = 0; k < real.size(); ++k) real[k] = best.outcome.v[k].real();
  const auto params = SymmetricAxialParams::normalized(std::move(real), best.mu);

  FitResult result;
  result.params = params;
  result.loglik = log_likelihood(params, sample);
  result.M = M;
  result.n = sample.size();
  result.free_params = params.free_parameters();
  result.converged = best.outcome.converged;
  result.starts_converged = profiler.converged();
  result.iterations_total = profiler.iterations();
  result.best_start_index = 0;
  result.small_sample_warning = small_sample(sample.size(), M);
  result.density_underflow = best.outcome.underflow || !std::isfinite(result.loglik);
  if (!std::isfinite(result.loglik))
    result.loglik = clamped_log_likelihood(symmetric_to_general(params), sample).value;
  return result;
}

}  // namespace nnts
