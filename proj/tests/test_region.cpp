#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "riskregion/region.hpp"
#include "riskregion/testbed.hpp"

using namespace riskregion;
using std::numbers::pi;

namespace {

std::shared_ptr<const SphereGrid> grid2() {
  static const auto g = std::make_shared<const SphereGrid>(SphereGrid::standard(2));
  return g;
}

FitParams params(std::size_t ka, std::size_t ku, std::size_t kp, double h) {
  FitParams p;
  p.k_alpha = ka;
  p.k_u = ku;
  p.k_psi = kp;
  p.h = h;
  return p;
}

const Sample& cauchy_sample() {
  static const Sample s = model(ModelKind::cauchy2).sample(5000, 4242);
  return s;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / std::abs(b[i]));
  return m;
}

}  // namespace

TEST(EstimateRegion, BivariateCauchyIsNearlyCircular) {
  const auto sel = select_parameters(cauchy_sample(), {}, *grid2());
  const RegionFit fit = fit_region(cauchy_sample(), sel.params, grid2());
  const auto radii = fit.region(1.0 / 5000.0).boundary_on(*grid2());
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  EXPECT_LE(*hi / *lo, 1.5);
}

TEST(EstimateRegion, ScaleFormula) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const double p = 1e-4;
  const double expected = fit.tail().u_hat *
                          std::pow(200.0 * fit.nu_s() / (5000.0 * p), 1.0 / fit.tail().alpha_hat);
  EXPECT_NEAR(fit.scale(p), expected, 1e-12 * expected);
  const auto w = UnitDirection::from_angle(1.0);
  EXPECT_NEAR(fit.region(p).base_radial(w),
              std::pow(fit.tail().alpha_hat * fit.spectral().psi_hat(w), 1.0 / (fit.tail().alpha_hat + 2.0)), 1e-15);
  const auto& m = fit.region(p).meta();
  EXPECT_EQ(m.k_alpha, 300u);
  EXPECT_EQ(m.k_u, 200u);
  EXPECT_EQ(m.k_psi, 400u);
  EXPECT_EQ(m.p, p);
}

TEST(EstimateRegion, Nesting) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const StarRegion small = fit.region(1.0 / 10000.0);
  const StarRegion large = fit.region(1.0 / 5000.0);
  const auto rs = small.boundary_on(*grid2());
  const auto rl = large.boundary_on(*grid2());
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_GT(rs[i], rl[i]);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.uniform(0, 2 * pi), r = std::exp(rng.uniform(0, 12));
    const double z[2] = {r * std::cos(t), r * std::sin(t)};
    if (small.contains(z)) EXPECT_TRUE(large.contains(z));
  }
  double prev = fit.scale(1e-6);
  for (double p = 2e-6; p < 0.1; p *= 2) {
    EXPECT_LT(fit.scale(p), prev);
    prev = fit.scale(p);
  }
}

TEST(EstimateRegion, ScaleEquivariance) {
  const FitParams prm = params(300, 200, 400, 0.4);
  const RegionFit a = fit_region(cauchy_sample(), prm, grid2());
  const RegionFit b = fit_region(cauchy_sample().scaled(10.0), prm, grid2());
  EXPECT_NEAR(b.scale(2e-4) / a.scale(2e-4), 10.0, 1e-10 * 10.0);
  const auto ra = a.region(2e-4).boundary_on(*grid2());
  auto rb = b.region(2e-4).boundary_on(*grid2());
  for (auto& v : rb) v /= 10.0;
  EXPECT_LE(max_rel_diff(rb, ra), 1e-10);
  EXPECT_LE(max_rel_diff(b.region(2e-4).base_radial_on(*grid2()), a.region(2e-4).base_radial_on(*grid2())), 1e-12);
}

TEST(EstimateRegion, RotationEquivariance) {
  const FitParams prm = params(300, 200, 400, 0.4);
  const Rotation r = Rotation::planar(0.6);
  const auto g = std::make_shared<const SphereGrid>(SphereGrid::make(2, 360));
  const auto gr = std::make_shared<const SphereGrid>(g->rotated(r));
  const RegionFit a = fit_region(cauchy_sample(), prm, g);
  const RegionFit b = fit_region(r.apply(cauchy_sample()), prm, gr);
  EXPECT_LE(max_rel_diff(b.region(1e-4).boundary_on(*gr), a.region(1e-4).boundary_on(*g)), 1e-9);
}

TEST(EstimateRegion, LevelOfTheBaseSetDoesNotMatter) {
  FitParams prm = params(300, 200, 400, 0.4);
  const auto ref = fit_region(cauchy_sample(), prm, grid2()).region(1e-4).boundary_on(*grid2());
  for (double c : {0.01, 0.5, 7.0, 300.0}) {
    prm.level = c;
    const auto alt = fit_region(cauchy_sample(), prm, grid2()).region(1e-4).boundary_on(*grid2());
    EXPECT_LE(max_rel_diff(alt, ref), 1e-10) << c;
  }
}

TEST(EstimateRegion, Errors) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  EXPECT_THROW(fit.region(0.0), std::invalid_argument);
  EXPECT_THROW(fit.region(1.0), std::invalid_argument);
  // Bounded data: the extreme-value index is not positive.
  Sample s(2);
  Rng rng(9);
  for (int i = 0; i < 3000; ++i) s.push_back(Vec{rng.uniform(-1, 1), rng.uniform(-1, 1), 0});
  try {
    fit_region(s, params(300, 200, 400, 0.4), grid2());
    FAIL() << "expected an estimation failure";
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.stage(), "tail index");
  }
  EXPECT_THROW(fit_region(cauchy_sample(), params(5000, 200, 400, 0.4), grid2()), std::invalid_argument);
}

TEST(Contains, BoundaryAndDegenerateRays) {
  const auto prof = std::make_shared<const DensityProfile>(2, 1.0, [](const UnitDirection& w) {
    return w[0] > 0.0 ? 0.0 : 1.0 / pi;
  });
  const StarRegion q(3.0, prof);
  const auto west = UnitDirection::from_angle(pi);
  const double rb = q.boundary_radius(west);
  const double on[2] = {-rb, 0.0};
  const double inside[2] = {-rb * 1.001, 0.0};
  const double outside[2] = {-rb * 0.999, 0.0};
  EXPECT_TRUE(q.contains(on));
  EXPECT_TRUE(q.contains(inside));
  EXPECT_FALSE(q.contains(outside));
  const double east[2] = {1e-9, 0.0};
  EXPECT_TRUE(q.contains(east));
  const double origin[2] = {0.0, 0.0};
  EXPECT_FALSE(q.contains(origin));
}

TEST(Contains, TrueCauchyRegion) {
  const double p = 1.0 / 5000.0;
  const auto truth = true_region(model(ModelKind::cauchy2), p, grid2());
  const double r = std::sqrt(1.0 / (p * p) - 1.0);
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(0, 2 * pi);
    const double in = r * (1.0 + 1e-7), out = r * (1.0 - 1e-7);
    const double zi[2] = {in * std::cos(t), in * std::sin(t)};
    const double zo[2] = {out * std::cos(t), out * std::sin(t)};
    EXPECT_TRUE(truth.region.contains(zi));
    EXPECT_FALSE(truth.region.contains(zo));
  }
}

TEST(PValue, RoundTripAndHomogeneity) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const double p0 = 3e-4;
  const StarRegion q = fit.region(p0);
  for (double t : {0.1, 1.3, 2.9, 5.0}) {
    const auto w = UnitDirection::from_angle(t);
    const double r = q.boundary_radius(w);
    const double x[2] = {r * w[0], r * w[1]};
    EXPECT_NEAR(fit.p_value(x).value, p0, 1e-12 * p0);
    const double x2[2] = {2 * x[0], 2 * x[1]};
    EXPECT_NEAR(fit.p_value(x2).value, p0 / std::pow(2.0, fit.tail().alpha_hat), 1e-12 * p0);
  }
  const double zero[2] = {0, 0};
  EXPECT_THROW(fit.p_value(zero), std::invalid_argument);
}

TEST(PValue, CoherentWithContains) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const StarRegion q = fit.region(2e-4);
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const double t = rng.uniform(0, 2 * pi), r = std::exp(rng.uniform(5, 11));
    const double z[2] = {r * std::cos(t), r * std::sin(t)};
    const PValue pv = fit.p_value(z);
    EXPECT_EQ(q.contains(z), pv.value <= 2e-4 * (1 + 1e-12));
  }
}

TEST(RankExtremes, SortedAndScaleInvariant) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const auto ranked = fit.rank_extremes(cauchy_sample(), 25);
  ASSERT_EQ(ranked.size(), 25u);
  for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_LE(ranked[i - 1].p_value, ranked[i].p_value);
  const auto top = fit.rank_extremes(cauchy_sample(), 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].index, ranked[0].index);

  const Sample big = cauchy_sample().scaled(10.0);
  const RegionFit fit10 = fit_region(big, params(300, 200, 400, 0.4), grid2());
  const auto ranked10 = fit10.rank_extremes(big, 25);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    EXPECT_EQ(ranked10[i].index, ranked[i].index);
    EXPECT_NEAR(ranked10[i].p_value, ranked[i].p_value, 1e-10 * ranked[i].p_value);
  }
}

TEST(ExportBoundary, RowsAndRoundTrip) {
  const RegionFit fit = fit_region(cauchy_sample(), params(300, 200, 400, 0.4), grid2());
  const StarRegion q = fit.region(1e-4);
  std::stringstream ss;
  export_boundary(ss, q, *grid2());
  EXPECT_NE(ss.str().find("# k_psi: 400"), std::string::npos);
  std::vector<BoundaryRow> rows;
  EXPECT_EQ(read_boundary(ss, rows), 2);
  ASSERT_EQ(rows.size(), grid2()->size());
  for (const auto& r : rows) EXPECT_TRUE(q.contains(std::span<const double>(r.point.data(), 2)));
}

TEST(ExportBoundary, ConstantProfileAndSphere) {
  const auto g = SphereGrid::make(3, 16);
  const StarRegion q(4.0, std::make_shared<const ConstantProfile>(3, 0.5));
  std::stringstream ss;
  export_boundary(ss, q, g);
  std::vector<BoundaryRow> rows;
  EXPECT_EQ(read_boundary(ss, rows), 3);
  ASSERT_EQ(rows.size(), g.size());
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.radius, 2.0);
    EXPECT_TRUE(q.contains(std::span<const double>(r.point.data(), 3)));
  }
}

TEST(SelectParameters, OverridesSkipScans) {
  AutoOptions o;
  o.k_alpha = 250;
  o.k_u = 120;
  const auto sel = select_parameters(cauchy_sample(), o, *grid2());
  EXPECT_EQ(sel.params.k_alpha, 250u);
  EXPECT_EQ(sel.params.k_u, 120u);
  EXPECT_FALSE(sel.alpha_scan.has_value());
  EXPECT_FALSE(sel.u_scan.has_value());
  ASSERT_TRUE(sel.nu_scan.has_value());
  EXPECT_EQ(sel.params.k_psi, sel.nu_scan->selected_k);
  EXPECT_DOUBLE_EQ(sel.params.h, 0.4);
  EXPECT_DOUBLE_EQ(default_bandwidth(3), 0.5);
}
