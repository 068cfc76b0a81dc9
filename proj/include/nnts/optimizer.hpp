#pragma once

// Maximum-likelihood fitting of NNTS axial models.
//
// The log-likelihood of v on the unit complex hypersphere is
//
//   l(v) = sum_i log |p_i(v)|^2 - n log(pi),   p_i(v) = sum_k v_k exp(i 2k theta_i),
//
// and its (Wirtinger) gradient is g(v) = sum_i u_i / conj(p_i) with
// u_i = (exp(-i 2k theta_i))_k. Since v^H g(v) = n, the tangent component of
// g at v is g - n v.
//
// Each iteration takes a modified Newton step in the tangent space
// orthogonal to v (and to i v, the global phase) from the Hessian of the
// scale-invariant extension sum log |p_i|^2 - n log |v|^2, shifted when it is
// not negative definite. The step is retracted to the sphere by
// renormalization and halved until the log-likelihood does not decrease; if
// that fails the tangent gradient (g - n v)/n is tried the same way.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "nnts/core.hpp"

namespace nnts {

/// One accepted ascent step, reported to FitOptions::observer.
struct AscentStep {
  int start_index = 0;
  int iteration = 0;
  double loglik_before = 0.0;
  double loglik_after = 0.0;
  double step_length = 0.0;
  double tangent_gradient_norm = 0.0;
};

struct FitOptions {
  int restarts = 20;
  int max_iterations = 1000;
  double tol_rel = 1e-9;
  /// Stop when ||g - n v|| < tol_grad * max(1, n).
  double tol_grad = 1e-8;
  std::uint64_t seed = 0;
  int mu_grid_size = 64;
  /// Called for every accepted step of every start. Must be thread-safe if
  /// the caller runs fits concurrently.
  std::function<void(const AscentStep&)> observer;

  /// Throws UsageError when a count is < 1 or a tolerance is not positive.
  void validate() const;
};

using FittedParams = std::variant<AxialParams, SymmetricAxialParams>;

struct FitResult {
  FittedParams params = AxialParams::uniform();
  double loglik = 0.0;
  int M = 0;
  std::size_t n = 0;
  int free_params = 0;
  bool converged = false;
  int starts_converged = 0;
  long iterations_total = 0;
  int best_start_index = 0;
  bool small_sample_warning = false;
  bool density_underflow = false;

  bool symmetric() const { return std::holds_alternative<SymmetricAxialParams>(params); }
  /// The fitted density as general parameters (symmetric fits are expanded).
  AxialParams general_params() const;
};

/// n < 7M: too few observations to fit order M reliably.
bool small_sample(std::size_t n, int M);

/// Fits the general order-M model. `warm_start` (any order <= M, zero padded)
/// is used as the second start; passing the order M-1 optimum guarantees the
/// result is at least as good as the lower-order fit.
FitResult fit_general(const AxialSample& sample, int M, const FitOptions& options,
                      const std::optional<AxialParams>& warm_start = std::nullopt);

/// Fits the symmetric order-M model: profile over a uniform mu grid, golden
/// section refinement of the best grid cell, real-restricted ascent at each mu.
FitResult fit_symmetric(const AxialSample& sample, int M, const FitOptions& options);

}  // namespace nnts
