#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "riskregion/tailfit.hpp"
#include "riskregion/types.hpp"

using namespace riskregion;

namespace {

std::vector<double> pareto(std::size_t n, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> r(n);
  for (auto& v : r) v = std::pow(rng.uniform(), -1.0 / alpha);
  return r;
}

const std::vector<double> kPowers = {1, 2, 4, 8, 16};

}  // namespace

TEST(Hill, HandEvaluation) {
  EXPECT_NEAR(hill(kPowers, 4), 2.5 * std::log(2.0), 1e-12);
  // The estimator only sees the order statistics.
  EXPECT_NEAR(hill(std::vector<double>{16, 1, 8, 2, 4}, 4), 2.5 * std::log(2.0), 1e-12);
}

TEST(Hill, EqualRadiiGiveZero) {
  const std::vector<double> r(20, 3.0);
  for (std::size_t k : {1, 5, 19}) EXPECT_EQ(hill(r, k), 0.0);
}

TEST(Hill, ZeroOnlyWhenTopOrderStatisticsTie) {
  const std::vector<double> r = {1, 2, 5, 5, 5};
  EXPECT_EQ(hill(r, 2), 0.0);
  EXPECT_GT(hill(r, 3), 0.0);
}

TEST(Hill, RejectsBadInput) {
  EXPECT_THROW(hill(kPowers, 0), std::invalid_argument);
  EXPECT_THROW(hill(kPowers, 5), std::invalid_argument);
  EXPECT_THROW(hill(std::vector<double>{1, 0, 2}, 1), std::invalid_argument);
  EXPECT_THROW(hill(std::vector<double>{1, -3, 2}, 1), std::invalid_argument);
}

TEST(Hill, ParetoWithinFiveStandardErrors) {
  const auto r = pareto(50000, 1.0, 11);
  const std::size_t k = 2000;
  EXPECT_NEAR(hill(r, k), 1.0, 5.0 / std::sqrt(static_cast<double>(k)));
}

TEST(Moment, HandEvaluation) {
  // M1 = 2.5 log 2, M2 = 7.5 (log 2)^2, so 1 - M1^2/M2 = 1/6.
  EXPECT_NEAR(moment_estimator(kPowers, 4), 2.5 * std::log(2.0) - 2.0, 1e-12);
}

TEST(Moment, DegenerateSpacingsAreAnEstimationFailure) {
  const std::vector<double> r(10, 2.0);
  EXPECT_THROW(moment_estimator(r, 4), EstimationError);
}

TEST(Moment, ParetoWithinFiveStandardErrors) {
  // Asymptotic variance of the moment estimator for gamma > 0 is 1 + gamma^2.
  const auto r = pareto(50000, 1.0, 12);
  const std::size_t k = 2000;
  EXPECT_NEAR(moment_estimator(r, k), 1.0, 5.0 * std::sqrt(2.0 / static_cast<double>(k)));
}

TEST(TailEstimators, ConsistencyForTwoTailIndices) {
  const std::size_t n = 50000;
  const auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)) * 20.0);
  for (double alpha : {1.0, 3.0}) {
    const auto r = pareto(n, alpha, 100 + static_cast<std::uint64_t>(alpha));
    EXPECT_LT(std::abs(hill(r, k) - 1.0 / alpha), 0.1);
    EXPECT_LT(std::abs(moment_estimator(r, k) - 1.0 / alpha), 0.1);
  }
}

TEST(TailEstimators, ScaleInvariance) {
  const auto r = pareto(3000, 2.0, 5);
  std::vector<double> by8(r), by10(r);
  for (auto& v : by8) v *= 8.0;
  for (auto& v : by10) v *= 10.0;
  for (std::size_t k : {50, 300}) {
    // Multiplying by a power of two is exact in floating point.
    EXPECT_EQ(hill(by8, k), hill(r, k));
    EXPECT_EQ(moment_estimator(by8, k), moment_estimator(r, k));
    EXPECT_NEAR(hill(by10, k), hill(r, k), 1e-12);
    EXPECT_NEAR(moment_estimator(by10, k), moment_estimator(r, k), 1e-12);
    EXPECT_NEAR(scale_u_hat(by10, k), 10.0 * scale_u_hat(r, k), 1e-12 * scale_u_hat(by10, k));
  }
}

TEST(TailEstimators, PermutationInvariance) {
  auto r = pareto(2000, 1.5, 6);
  const double h = hill(r, 150);
  const double m = moment_estimator(r, 150);
  std::reverse(r.begin(), r.end());
  std::rotate(r.begin(), r.begin() + 777, r.end());
  EXPECT_EQ(hill(r, 150), h);
  EXPECT_EQ(moment_estimator(r, 150), m);
}

TEST(TailEstimators, OnlyTopOrderStatisticsMatter) {
  auto r = pareto(2000, 1.5, 7);
  const double h = hill(r, 100);
  const double m = moment_estimator(r, 100);
  std::vector<double> sorted(r);
  std::sort(sorted.begin(), sorted.end());
  const double threshold = sorted[sorted.size() - 101];
  for (auto& v : r) {
    if (v < threshold) v = threshold * 0.5;
  }
  EXPECT_EQ(hill(r, 100), h);
  EXPECT_EQ(moment_estimator(r, 100), m);
}

TEST(ScaleU, OrderStatistic) {
  EXPECT_EQ(scale_u_hat(std::vector<double>{3, 1, 2, 5, 4}, 2), 3.0);
  EXPECT_EQ(scale_u_hat(std::vector<double>{3, 1, 2, 5, 4}, 4), 1.0);
  EXPECT_THROW(scale_u_hat(std::vector<double>{3, 1, 2}, 3), std::invalid_argument);
}

TEST(ScaleU, ParetoQuantile) {
  // U(t) = t for Pareto(1), so U(n/k) = 100 at n = 50000, k = 500.
  const auto r = pareto(50000, 1.0, 13);
  EXPECT_NEAR(scale_u_hat(r, 500), 100.0, 20.0);
}

TEST(FitTail, RejectsNonHeavyTail) {
  Rng rng(3);
  std::vector<double> r(2000);
  for (auto& v : r) v = rng.uniform();
  EXPECT_THROW(fit_tail(r, 200, 200), EstimationError);
  const auto p = pareto(2000, 2.0, 4);
  const TailFit f = fit_tail(p, 200, 100, TailEstimator::hill);
  EXPECT_DOUBLE_EQ(f.alpha_hat, 1.0 / f.gamma_hat);
  EXPECT_EQ(f.u_hat, scale_u_hat(p, 100));
  EXPECT_EQ(f.k_alpha, 200u);
  EXPECT_EQ(f.k_u, 100u);
}

TEST(StabilityScan, ConstantSeriesPicksFirstWindowMidpoint) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 10; k <= 300; k += 10) ks.push_back(k);
  const std::vector<double> est(ks.size(), 0.7);
  for (auto sel : {ScanOptions::Selection::first, ScanOptions::Selection::first_run, ScanOptions::Selection::min_sd}) {
    ScanOptions o;
    o.selection = sel;
    const auto s = select_stable_window("c", ks, est, o);
    EXPECT_TRUE(s.stable);
    EXPECT_EQ(s.window_begin, 0u);
    EXPECT_EQ(s.selected_k, ks[(o.window - 1) / 2]);
    EXPECT_EQ(s.selected_value, 0.7);
  }
}

TEST(StabilityScan, TrendWithoutFlatWindowIsUnstable) {
  std::vector<std::size_t> ks;
  std::vector<double> est;
  for (std::size_t i = 0; i < 40; ++i) {
    ks.push_back(10 + 10 * i);
    est.push_back(std::exp(0.1 * static_cast<double>(i)));
  }
  const auto s = select_stable_window("trend", ks, est);
  EXPECT_FALSE(s.stable);
  EXPECT_EQ(std::count(s.k_values.begin(), s.k_values.end(), s.selected_k), 1);
  std::ostringstream os;
  write_scan(os, s);
  EXPECT_NE(os.str().find("selected_unstable"), std::string::npos);
}

TEST(StabilityScan, SelectionModes) {
  // Two flat stretches: a noisier one first, a perfectly flat one later,
  // separated by a jump.
  std::vector<std::size_t> ks;
  std::vector<double> est;
  for (std::size_t i = 0; i < 60; ++i) {
    ks.push_back(10 * (i + 1));
    if (i < 20) {
      est.push_back(1.0 + 0.01 * ((i % 3) - 1.0));
    } else if (i < 30) {
      est.push_back(1.0 + 0.1 * static_cast<double>(i - 19));
    } else {
      est.push_back(3.0);
    }
  }
  ScanOptions o;
  o.window = 5;
  o.selection = ScanOptions::Selection::first;
  EXPECT_EQ(select_stable_window("s", ks, est, o).window_begin, 0u);
  o.selection = ScanOptions::Selection::first_run;
  EXPECT_LT(select_stable_window("s", ks, est, o).window_begin, 20u);
  o.selection = ScanOptions::Selection::min_sd;
  EXPECT_GE(select_stable_window("s", ks, est, o).window_begin, 30u);
}

TEST(StabilityScan, Validation) {
  const std::vector<std::size_t> ks = {1, 2, 3, 4, 5};
  const std::vector<double> est = {1, 1, 1, 1, 1};
  ScanOptions o;
  o.window = 2;
  EXPECT_THROW(select_stable_window("v", ks, est, o), std::invalid_argument);
  o.window = 6;
  EXPECT_EQ(select_stable_window("v", ks, est, o).window_end, 5u);
  EXPECT_THROW(select_stable_window("v", {1, 2}, {1, 1}, o), std::invalid_argument);
  o.window = 3;
  EXPECT_THROW(select_stable_window("v", {1, 3, 2, 4, 5}, est, o), std::invalid_argument);
  EXPECT_THROW(select_stable_window("v", ks, {1, 1, 1}, o), std::invalid_argument);
}

TEST(StabilityScan, HillScanOnParetoSelectsNearTruth) {
  const auto r = pareto(5000, 1.0, 21);
  const ScanOptions flattest{.selection = ScanOptions::Selection::min_sd};
  const auto s = scan_gamma(r, TailEstimator::hill, default_rank_grid(r.size()), flattest);
  EXPECT_TRUE(std::find(s.k_values.begin(), s.k_values.end(), s.selected_k) != s.k_values.end());
  EXPECT_EQ(s.k_values.size(), s.estimates.size());
  EXPECT_NEAR(s.selected_value, 1.0, 3.0 / std::sqrt(static_cast<double>(s.selected_k)));
}

TEST(StabilityScan, ScaledUIsFlatForPareto) {
  // U(n/k) (k/n)^{1/alpha} equals 1 for a Pareto(1) law.
  const auto r = pareto(20000, 1.0, 22);
  const auto s = scan_scaled_u(r, 1.0, default_rank_grid(r.size()));
  EXPECT_NEAR(s.selected_value, 1.0, 0.15);
}

TEST(StabilityScan, ScanTableHasOneRowPerRank) {
  const auto r = pareto(3000, 1.0, 23);
  const auto grid = default_rank_grid(r.size());
  const auto s = scan_gamma(r, TailEstimator::moment, grid);
  std::ostringstream os;
  write_scan(os, s);
  std::istringstream in(os.str());
  std::string line;
  std::size_t data_rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      EXPECT_EQ(line, "k,estimate,flag");
      header = true;
      continue;
    }
    ++data_rows;
  }
  EXPECT_EQ(data_rows, grid.size());
}

TEST(RankGrid, DefaultGrid) {
  const auto g = default_rank_grid(5000);
  EXPECT_EQ(g.front(), 20u);
  EXPECT_EQ(g.back(), 1000u);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Equality, PaperDifferences) {
  const std::vector<double> est = {0.141, 0.191, 0.223, 0.242, 0.256};
  EXPECT_NEAR(max_pairwise_difference(est), 0.115, 1e-12);
}

TEST(Equality, IdenticalSamplesAreNotRejected) {
  const auto r = pareto(3000, 4.0, 31);
  const auto rep = test_equal_tail_indices({r, r}, {200, 200}, {200, 0.95, 7});
  EXPECT_EQ(rep.max_difference, 0.0);
  EXPECT_FALSE(rep.reject);
  ASSERT_EQ(rep.estimates.size(), 2u);
  EXPECT_EQ(rep.estimates[0], rep.estimates[1]);
}

TEST(Equality, CalibratedUnderTheNull) {
  int rejections = 0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    std::vector<std::vector<double>> samples;
    for (int j = 0; j < 5; ++j) samples.push_back(pareto(2000, 4.0, derive_seed(41, {std::uint64_t(run), std::uint64_t(j)})));
    const auto rep = test_equal_tail_indices(samples, {200, 200, 200, 200, 200}, {200, 0.95, std::uint64_t(run)});
    rejections += rep.reject;
  }
  EXPECT_LE(rejections, 2);
}

TEST(Equality, DetectsDifferentTailIndices) {
  std::vector<std::vector<double>> samples = {pareto(4000, 1.0, 51), pareto(4000, 4.0, 52)};
  const auto rep = test_equal_tail_indices(samples, {300, 300}, {200, 0.95, 3});
  EXPECT_TRUE(rep.reject);
}

TEST(Equality, Validation) {
  const auto r = pareto(500, 2.0, 61);
  EXPECT_THROW(test_equal_tail_indices({r}, {50}), std::invalid_argument);
  EXPECT_THROW(test_equal_tail_indices({r, r}, {50}), std::invalid_argument);
}
