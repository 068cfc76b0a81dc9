#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nnts/errors.hpp"
#include "nnts/inference.hpp"
#include "oracles.hpp"

using namespace nnts;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// The tables print values computed from unrounded logliks, so recomputing from
// the printed 2 dp logliks can be one unit off in the last place.
bool matches_table(double computed, double printed) { return std::abs(round2(computed) - printed) <= 0.01 + 1e-9; }

// Feldspar laths, n = 133: loglik, BIC, AIC for M = 0..13.
struct TableRow {
  double loglik, bic, aic;
};
const std::vector<TableRow> kFeldspar = {
    {-152.25, 304.50, 304.50}, {-150.36, 310.49, 304.71}, {-147.66, 314.89, 303.33},
    {-143.33, 316.01, 298.66}, {-137.26, 313.64, 290.51}, {-136.90, 322.70, 293.80},
    {-136.61, 331.90, 297.21}, {-134.28, 337.03, 296.56}, {-132.50, 343.25, 297.00},
    {-132.13, 352.29, 300.27}, {-130.35, 358.50, 300.70}, {-129.24, 366.08, 302.49},
    {-128.94, 375.25, 305.88}, {-128.41, 383.97, 308.82}};

const std::vector<double> kTermiteM5 = {-50.10, -6.92, -0.17, 0.15,  -3.69, 8.74,  -5.69,
                                        -4.63,  -17.65, 16.13, 10.38, 2.26,  26.42, 8.51};

}  // namespace

TEST_CASE("information criteria") {
  const auto m1 = information_criteria(-150.36, 2, 133);
  CHECK(matches_table(m1.bic, 310.49));
  CHECK(matches_table(m1.aic, 304.71));
  CHECK(matches_table(information_criteria(-137.26, 8, 133).aic, 290.51));
  CHECK(m1.aic == -2.0 * -150.36 + 4.0);
  const auto m0 = information_criteria(-12.5, 0, 40);
  CHECK(m0.aic == 25.0);
  CHECK(m0.bic == 25.0);
  CHECK_THROWS_AS(information_criteria(-1.0, 2, 0), UsageError);
}

TEST_CASE("table of feldspar criteria from supplied logliks") {
  std::vector<double> logliks;
  for (const auto& row : kFeldspar) logliks.push_back(row.loglik);
  const auto scan = scan_from_logliks(logliks, 133);
  REQUIRE(scan.rows.size() == kFeldspar.size());
  for (std::size_t m = 0; m < kFeldspar.size(); ++m) {
    CAPTURE(m);
    CHECK(matches_table(scan.rows[m].bic, kFeldspar[m].bic));
    CHECK(matches_table(scan.rows[m].aic, kFeldspar[m].aic));
  }
  CHECK(scan.best_bic_M == 0);
  CHECK(scan.best_aic_M == 4);
}

TEST_CASE("model scan") {
  FitOptions opts;
  opts.restarts = 4;
  const auto uniform = sample_axial(AxialParams::uniform(), 500, 77);
  const auto single = scan_models(uniform, 0, opts);
  REQUIRE(single.rows.size() == 1);
  CHECK(single.best_bic_M == 0);
  CHECK(single.best_aic_M == 0);

  const auto scan = scan_models(uniform, 4, opts);
  REQUIRE(scan.rows.size() == 5);
  CHECK(scan.best_bic_M == 0);
  for (const auto& row : scan.rows) {
    CHECK(row.free_params == 2 * row.M);
    CHECK(row.aic == -2.0 * row.loglik + 2.0 * row.free_params);
    CHECK(row.bic == -2.0 * row.loglik + row.free_params * std::log(500.0));
  }
  for (std::size_t m = 1; m < scan.rows.size(); ++m) CHECK(scan.rows[m].loglik >= scan.rows[m - 1].loglik - 1e-6);
  CHECK_THROWS_AS(scan_models(uniform, -1, opts), UsageError);

  // Ties go to the smaller order: one extra parameter pair buys exactly 2 in loglik.
  const std::vector<double> tied = {-10.0, -8.0};
  const auto t = scan_from_logliks(tied, 20);
  CHECK(t.rows[1].aic == t.rows[0].aic);
  CHECK(t.best_aic_M == 0);
}

TEST_CASE("chi-square tail: closed form and anchors") {
  for (double x : {0.0, 0.5, 1.0, 7.0, 40.0, 300.0})
    CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-14));
  CHECK(chi_square_sf(1.0, 2) == doctest::Approx(0.6065306597126334));
  for (int df : {1, 2, 12, 130}) CHECK(chi_square_sf(0.0, df) == 1.0);
  const double ruminant = chi_square_sf(130.52, 12);
  CHECK(ruminant > 4.85e-22 / 1.2);
  CHECK(ruminant < 4.85e-22 * 1.2);
  CHECK(std::abs(chi_square_sf(173.82, 130) - 0.0062) < 0.0005);
  CHECK_THROWS_AS(chi_square_sf(-1.0, 3), DomainError);
  CHECK_THROWS_AS(chi_square_sf(1.0, 0), DomainError);
}

TEST_CASE("chi-square tail agrees with quadrature of the density") {
  for (int df : {1, 2, 12, 130}) {
    double previous = 1.0;
    // Grid out to where the tail is below 1e-25.
    for (double x = 0.25; ; x *= 1.25) {
      const long double reference = oracle::chi_square_tail(x, df);
      const double value = chi_square_sf(x, df);
      CAPTURE(df);
      CAPTURE(x);
      CHECK(std::abs(value - reference) <= 1e-10L * reference);
      CHECK(chi_square_log10_sf(x, df) == doctest::Approx(static_cast<double>(std::log10(reference))).epsilon(1e-10));
      // Saturates at exactly 1 in double for x far below df.
      if (previous < 1.0) CHECK(value < previous);
      else CHECK(value <= previous);
      previous = value;
      if (reference < 1e-26L) break;
    }
  }
}

TEST_CASE("regularized incomplete gamma") {
  CHECK(regularized_gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  CHECK(regularized_gamma_p(3.0, 0.0) == 0.0);
  for (double a : {0.5, 2.0, 30.0})
    for (double x : {0.1, 1.0, 10.0, 60.0})
      CHECK(regularized_gamma_p(a, x) + regularized_gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::isfinite(log_regularized_gamma_q(2.0, 5000.0)));
  CHECK(log_regularized_gamma_q(2.0, 5000.0) < -2400.0);
  CHECK_THROWS_AS(regularized_gamma_p(0.0, 1.0), DomainError);
}

TEST_CASE("likelihood-ratio arithmetic") {
  const auto sym = lrt(-65.12, -64.62, 2, TestKind::symmetry);
  CHECK(sym.statistic == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(sym.p_value - 0.607) < 0.001);
  CHECK(sym.log10_p == doctest::Approx(std::log10(sym.p_value)));

  const auto same = lrt(-3.0, -3.0, 1, TestKind::nested);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const auto ruminant = lrt(-361.87, -275.77 - 2.41 - 18.43, 12, TestKind::homogeneity);
  CHECK(std::abs(ruminant.statistic - 130.52) < 1e-9);
  CHECK(ruminant.statistic == doctest::Approx(-2.0 * (ruminant.restricted_loglik - ruminant.general_loglik)));

  const auto clamped = lrt(-10.0 + 5e-7, -10.0, 1, TestKind::nested);
  CHECK(clamped.statistic == 0.0);
  CHECK_THROWS_AS(lrt(-275.77 - 2.41 - 18.43, -361.87, 12, TestKind::homogeneity), UsageError);
  CHECK_THROWS_AS(lrt(-2.0, -1.0, 0, TestKind::nested), UsageError);
  CHECK(std::string(to_string(TestKind::homogeneity)) == "homogeneity");
}

TEST_CASE("homogeneity from supplied logliks") {
  const std::vector<double> ruminants = {-275.77, -2.41, -18.43};
  const std::vector<int> orders = {1, 3, 6};
  const auto r = homogeneity_from_logliks(ruminants, orders, -361.87, 4);
  CHECK(r.df == 12);
  CHECK(std::abs(r.statistic - 130.52) < 0.02);
  CHECK(r.p_value > 4.0e-22);
  CHECK(r.p_value < 6.0e-22);
  CHECK(r.restricted_loglik == -361.87);
  CHECK(r.restricted_fits.empty());

  double total = 0.0;
  for (double l : kTermiteM5) total += l;
  CHECK(round2(total) == doctest::Approx(-16.26));
  const std::vector<int> fives(14, 5);
  const auto t = homogeneity_from_logliks(kTermiteM5, fives, -103.17, 5);
  CHECK(t.df == 130);
  CHECK(std::abs(t.statistic - 173.82) < 0.05);
  CHECK(std::abs(t.p_value - 0.0062) < 0.0005);

  const std::vector<int> small = {1, 1};
  CHECK(homogeneity_df(small, 1) == 2);
  CHECK_THROWS_AS(homogeneity_df(small, 2), UsageError);
  CHECK(homogeneity_df(small, 0) == 4);
  const std::vector<int> one = {3};
  CHECK_THROWS_AS(homogeneity_df(one, 1), UsageError);
  const std::vector<double> two = {-1.0, -2.0};
  CHECK_THROWS_AS(homogeneity_from_logliks(two, orders, -5.0, 1), UsageError);
}

TEST_CASE("tests on fitted samples") {
  FitOptions opts;
  opts.restarts = 5;
  std::mt19937_64 rng(41);
  const auto data = sample_axial(oracle::random_params(rng, 2), 300, 42);

  const auto u = uniformity_test(data, 2, opts);
  CHECK(u.df == 4);
  CHECK(u.restricted_loglik == doctest::Approx(-300.0 * std::log(kPi)));
  CHECK(u.statistic >= 0.0);
  CHECK(u.kind == TestKind::uniformity);
  CHECK_THROWS_AS(uniformity_test(data, 0, opts), UsageError);

  const auto nested = nested_test(data, 1, 3, opts);
  CHECK(nested.df == 4);
  CHECK(nested.general_loglik >= nested.restricted_loglik - 1e-6);
  CHECK_THROWS_AS(nested_test(data, 2, 2, opts), UsageError);

  CHECK_THROWS_AS(symmetry_test(data, 1, opts), UsageError);
  const auto s = symmetry_test(data, 2, opts);
  CHECK(s.df == 1);
  CHECK(s.general_loglik >= s.restricted_loglik - 1e-6);
  REQUIRE(s.restricted_fits.size() == 1);
  CHECK(s.restricted_fits[0].symmetric());
}

TEST_CASE("symmetry test under a symmetric null") {
  const SymmetricAxialParams truth = SymmetricAxialParams::normalized({0.6, 0.5, 0.4, -0.3}, 1.1);
  const auto data = sample_axial(symmetric_to_general(truth), 10000, 43);
  FitOptions opts;
  opts.restarts = 8;
  const auto s = symmetry_test(data, 3, opts);
  CHECK(s.df == 2);
  CHECK(s.p_value > 0.01);
}

TEST_CASE("homogeneity on fitted samples") {
  FitOptions opts;
  opts.restarts = 4;
  std::mt19937_64 rng(44);
  const auto a = sample_axial(oracle::random_params(rng, 2), 200, 45);
  const std::vector<AxialSample> twins = {a, a};
  const std::vector<int> orders = {2, 2};
  const auto same = homogeneity_test(twins, orders, 2, opts);
  CHECK(same.df == 4);
  CHECK(same.statistic < 1e-5);
  CHECK(same.p_value > 0.999);

  const auto b = sample_axial(oracle::random_params(rng, 1), 150, 46);
  const std::vector<AxialSample> pair = {a, b};
  const std::vector<int> mixed = {2, 1};
  const auto r = homogeneity_test(pair, mixed, 1, opts);
  int counted = 0;
  for (const auto& fit : r.general_fits) counted += fit.free_params;
  REQUIRE(r.restricted_fits.size() == 1);
  CHECK(r.df == counted - r.restricted_fits[0].free_params);
  CHECK(r.statistic >= 0.0);

  const std::vector<int> wrong = {2};
  CHECK_THROWS_AS(homogeneity_test(pair, wrong, 1, opts), UsageError);
}
