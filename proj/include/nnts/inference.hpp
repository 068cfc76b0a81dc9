#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnts/optimizer.hpp"

namespace nnts {

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

/// aic = -2 l + 2 p, bic = -2 l + p ln n.
InformationCriteria information_criteria(double loglik, int free_params, std::size_t n);

struct ModelScanRow {
  int M = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int free_params = 0;
};

struct ModelScan {
  std::size_t n = 0;
  std::vector<ModelScanRow> rows;
  std::vector<FitResult> fits;
  int best_bic_M = 0;
  int best_aic_M = 0;
};

/// Scans general fits for M = 0..max_order. Each order is warm-started from the
/// previous optimum, so logliks are non-decreasing in M.
ModelScan scan_models(const AxialSample& sample, int max_order, const FitOptions& options);

/// Builds rows from externally supplied log-likelihoods (index = M, general family).
ModelScan scan_from_logliks(std::span<const double> logliks, std::size_t n);

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
/// log Q(a, x), accurate where Q itself underflows.
double log_regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi_square_sf(double x, int df);
double chi_square_log10_sf(double x, int df);

enum class TestKind { uniformity, symmetry, nested, homogeneity };

const char* to_string(TestKind kind);

struct LRTResult {
  TestKind kind = TestKind::nested;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  double log10_p = 0.0;
  double restricted_loglik = 0.0;
  double general_loglik = 0.0;
  /// Fits behind each side; empty when computed from supplied log-likelihoods.
  std::vector<FitResult> restricted_fits;
  std::vector<FitResult> general_fits;
};

/// Likelihood-ratio test from maximized log-likelihoods. The restricted model
/// must not exceed the general one by more than 1e-6 (UsageError otherwise);
/// a slightly negative statistic is clamped to zero.
LRTResult lrt(double restricted_loglik, double general_loglik, int df, TestKind kind);

/// Uniform (M = 0) against general order m_alt; df = 2 m_alt.
LRTResult uniformity_test(const AxialSample& sample, int m_alt, const FitOptions& options);

/// Symmetric against general order M; df = M - 1, so M >= 2.
LRTResult symmetry_test(const AxialSample& sample, int M, const FitOptions& options);

/// General order m_restricted against general order m_general > m_restricted.
LRTResult nested_test(const AxialSample& sample, int m_restricted, int m_general,
                      const FitOptions& options);

/// Separate order-M_k fits per population against one pooled fit;
/// df = sum 2 M_k - 2 M_pooled. The pooled model is always the restricted one.
LRTResult homogeneity_test(std::span<const AxialSample> samples, std::span<const int> orders,
                           int pooled_order, const FitOptions& options);

/// Same test from supplied log-likelihoods.
LRTResult homogeneity_from_logliks(std::span<const double> population_logliks,
                                   std::span<const int> orders, double pooled_loglik,
                                   int pooled_order);

/// df of the homogeneity test; UsageError when < 1 or inputs are inconsistent.
int homogeneity_df(std::span<const int> orders, int pooled_order);

}  // namespace nnts
