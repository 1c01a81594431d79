#include "riskregion/testbed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/tools/roots.hpp>

#include "quadrature.hpp"

namespace riskregion {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

double toms748_root(const std::function<double(double)>& g, double lo, double hi, double glo, double ghi) {
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                        boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (a + b);
}

// Solves g(x) = 0 for x in [lo, hi] with g(lo) and g(hi) of opposite sign.
double bracketed_root(const std::function<double(double)>& g, double lo, double hi) {
  const double glo = g(lo);
  const double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  return toms748_root(g, lo, hi, glo, ghi);
}

// Survival of the radius outside the inner disc of the elliptical family.
double r0_equation_elliptical(double r0) {
  const double s = std::pow(r0, 6.0);
  return 1.5 * s * std::pow(1.0 + s, -1.5) + std::pow(1.0 + s, -0.5) - 1.0;
}

double r0_equation_asymmetric(double r0) {
  const double s = std::pow(r0, 4.0);
  return 0.5 * s * std::pow(1.0 + s, -1.25) + std::pow(1.0 + s, -0.25) - 1.0;
}

UnitDirection uniform_direction(Rng& rng, int d) {
  if (d == 2) return UnitDirection::from_angle(2.0 * kPi * rng.uniform());
  const double z = 2.0 * rng.uniform() - 1.0;
  return UnitDirection::from_spherical(std::acos(z), 2.0 * kPi * rng.uniform());
}

Vec scaled(const UnitDirection& w, double r) { return {r * w[0], r * w[1], r * w[2]}; }

class Cauchy2 final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::cauchy2; }
  int dim() const override { return 2; }
  double alpha() const override { return 1.0; }
  double density(std::span<const double> z) const override {
    const double r2 = z[0] * z[0] + z[1] * z[1];
    return 1.0 / (2.0 * kPi * std::pow(1.0 + r2, 1.5));
  }
  double true_spectral(const UnitDirection&) const override { return 1.0 / (2.0 * kPi); }
  Vec draw(Rng& rng) const override {
    // P(R > t) = (1 + t^2)^{-1/2}
    const double u = rng.uniform();
    const double r = std::sqrt(1.0 / (u * u) - 1.0);
    return scaled(uniform_direction(rng, 2), r);
  }
};

class Cauchy3 final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::cauchy3; }
  int dim() const override { return 3; }
  double alpha() const override { return 1.0; }
  double density(std::span<const double> z) const override {
    const double r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    return 1.0 / (kPi * kPi * (1.0 + r2) * (1.0 + r2));
  }
  double true_spectral(const UnitDirection&) const override { return 1.0 / (4.0 * kPi); }
  Vec draw(Rng& rng) const override {
    // P(R <= tan(phi)) = (2 phi - sin(2 phi)) / pi; solve for phi.
    const double u = rng.uniform();
    const double target = kPi * u;
    const auto g = [target](double phi) {
      return std::make_pair(2.0 * phi - std::sin(2.0 * phi) - target, 4.0 * std::sin(phi) * std::sin(phi));
    };
    const double guess = std::min(0.5 * std::cbrt(6.0 * target), 0.5 * kPi * (1.0 - 1e-15));
    std::uintmax_t iters = 100;
    const double phi =
        boost::math::tools::newton_raphson_iterate(g, guess, 0.0, 0.5 * kPi * (1.0 - 1e-16), 50, iters);
    return scaled(uniform_direction(rng, 3), std::tan(phi));
  }
};

class Elliptical final : public Model {
 public:
  Elliptical() : r0_(elliptical_r0()), c_(elliptical_psi_constant()) {
    const double s = std::pow(r0_, 6.0);
    inner_density_ = 3.0 / (4.0 * kPi) * std::pow(r0_, 4.0) * std::pow(1.0 + s, -1.5);
    inner_mass_ = 1.0 - std::pow(1.0 + s, -0.5);
  }
  ModelKind kind() const override { return ModelKind::elliptical; }
  int dim() const override { return 2; }
  double alpha() const override { return 3.0; }
  double density(std::span<const double> z) const override {
    const double q = z[0] * z[0] / 4.0 + z[1] * z[1];
    if (q < r0_ * r0_) return inner_density_;
    return 3.0 * q * q / (4.0 * kPi * std::pow(1.0 + q * q * q, 1.5));
  }
  double true_spectral(const UnitDirection& w) const override { return c_ * std::pow(1.0 + 3.0 * w[1] * w[1], -2.5); }
  Vec draw(Rng& rng) const override {
    // In u = (x/2, y) the law is circular: uniform on the r0-disc, then
    // radial survival (1 + rho^6)^{-1/2}.
    const double u = rng.uniform();
    const double rho = u < inner_mass_ ? r0_ * std::sqrt(u / inner_mass_)
                                       : std::pow(1.0 / ((1.0 - u) * (1.0 - u)) - 1.0, 1.0 / 6.0);
    const double phi = 2.0 * kPi * rng.uniform();
    return {2.0 * rho * std::cos(phi), rho * std::sin(phi), 0.0};
  }

 private:
  double r0_;
  double c_;
  double inner_density_;
  double inner_mass_;
};

class Clover final : public Model {
 public:
  Clover() : r0_(elliptical_r0()) {
    const double s = std::pow(r0_, 6.0);
    inner_coef_ = 3.0 / (10.0 * kPi) * std::pow(r0_, 4.0) * std::pow(1.0 + s, -1.5);
    inner_mass_ = 1.0 - std::pow(1.0 + s, -0.5);
  }
  ModelKind kind() const override { return ModelKind::clover; }
  int dim() const override { return 2; }
  double alpha() const override { return 3.0; }
  double density(std::span<const double> z) const override {
    const double x2 = z[0] * z[0];
    const double y2 = z[1] * z[1];
    const double r2 = x2 + y2;
    if (r2 < r0_ * r0_) {
      if (r2 == 0.0) return inner_coef_ * 5.0;
      return inner_coef_ * (5.0 + (4.0 * r2 * r2 - 32.0 * x2 * y2) / (r0_ * std::pow(r2, 1.5)));
    }
    return 3.0 * (9.0 * r2 * r2 - 32.0 * x2 * y2) / (10.0 * kPi * std::pow(1.0 + r2 * r2 * r2, 1.5));
  }
  double true_spectral(const UnitDirection& w) const override {
    return (9.0 - 32.0 * w[0] * w[0] * w[1] * w[1]) / (10.0 * kPi);
  }
  Vec draw(Rng& rng) const override {
    const double u = rng.uniform();
    if (u < inner_mass_) {
      // Uniform point in the disc, accepted with probability f / max f.
      while (true) {
        const double rho = r0_ * std::sqrt(rng.uniform());
        const double phi = 2.0 * kPi * rng.uniform();
        const double s2 = std::sin(2.0 * phi);
        if (9.0 * rng.uniform() <= 5.0 + rho * (4.0 - 8.0 * s2 * s2) / r0_) {
          return {rho * std::cos(phi), rho * std::sin(phi), 0.0};
        }
      }
    }
    const double rho = std::pow(1.0 / ((1.0 - u) * (1.0 - u)) - 1.0, 1.0 / 6.0);
    while (true) {
      const double phi = 2.0 * kPi * rng.uniform();
      const double s2 = std::sin(2.0 * phi);
      if (9.0 * rng.uniform() <= 9.0 - 8.0 * s2 * s2) return {rho * std::cos(phi), rho * std::sin(phi), 0.0};
    }
  }

 private:
  double r0_;
  double inner_coef_;
  double inner_mass_;
};

class AsymmetricShifted final : public Model {
 public:
  AsymmetricShifted() : r0_(asymmetric_r0()) {
    const double s = std::pow(r0_, 4.0);
    inner_mass_ = 1.0 - std::pow(1.0 + s, -0.25);
  }
  ModelKind kind() const override { return ModelKind::asymm_shifted; }
  int dim() const override { return 2; }
  double alpha() const override { return 1.0; }
  Vec center() const override { return {-5.0, 0.0, 0.0}; }
  double density(std::span<const double> z) const override {
    const double xs = z[0] + 5.0;
    const double y = z[1];
    const double rt = std::max(r0_, std::sqrt(xs * xs + y * y));
    const double lead = rt * rt / (6.0 * kPi * std::pow(1.0 + rt * rt * rt * rt, 1.25));
    if (y >= 0.0) return lead * (3.0 + xs / rt);
    return lead * (3.0 + (xs * xs * xs - 3.0 * xs * y * y) / (rt * rt * rt));
  }
  double true_spectral(const UnitDirection& w) const override {
    if (w[1] >= 0.0) return (3.0 + w[0]) / (6.0 * kPi);
    return (3.0 + 4.0 * w[0] * w[0] * w[0] - 3.0 * w[0]) / (6.0 * kPi);
  }
  Vec draw(Rng& rng) const override {
    const double u = rng.uniform();
    double rho = 0.0;
    double phi = 0.0;
    if (u < inner_mass_) {
      while (true) {
        rho = r0_ * std::sqrt(rng.uniform());
        phi = 2.0 * kPi * rng.uniform();
        const double lift = phi < kPi ? rho * std::cos(phi) / r0_ : std::pow(rho / r0_, 3.0) * std::cos(3.0 * phi);
        if (4.0 * rng.uniform() <= 3.0 + lift) break;
      }
    } else {
      // P(rho > t) = (1 + t^4)^{-1/4}; each half-plane carries mass 1/2.
      const double v = 1.0 - u;
      rho = std::pow(std::pow(v, -4.0) - 1.0, 0.25);
      const bool upper = rng.uniform() < 0.5;
      while (true) {
        phi = kPi * rng.uniform();
        if (!upper) phi += kPi;
        const double lift = upper ? std::cos(phi) : std::cos(3.0 * phi);
        if (4.0 * rng.uniform() <= 3.0 + lift) break;
      }
    }
    return {-5.0 + rho * std::cos(phi), rho * std::sin(phi), 0.0};
  }

 private:
  double r0_;
  double inner_mass_;
};

class IndependentT3 final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::indep_t3; }
  int dim() const override { return 2; }
  double alpha() const override { return 3.0; }
  bool has_spectral_density() const override { return false; }
  static double t3(double x) {
    const double a = 1.0 + x * x / 3.0;
    return 2.0 / (kPi * std::sqrt(3.0) * a * a);
  }
  double density(std::span<const double> z) const override { return t3(z[0]) * t3(z[1]); }
  double true_spectral(const UnitDirection&) const override {
    throw std::domain_error("indep_t3: discrete spectral measure has no density");
  }
  Vec draw(Rng& rng) const override {
    const auto one = [&rng] {
      const double z = rng.normal();
      double chi2 = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double g = rng.normal();
        chi2 += g * g;
      }
      return z / std::sqrt(chi2 / 3.0);
    };
    const double x = one();
    const double y = one();
    return {x, y, 0.0};
  }
};

// Uniform angle; P(R > r) = (1 + log r)/r for r >= e and a linear CDF on [0, e].
class Logarithmic final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::logarithmic; }
  int dim() const override { return 2; }
  double alpha() const override { return 1.0; }
  double density(std::span<const double> z) const override {
    const double r = std::sqrt(z[0] * z[0] + z[1] * z[1]);
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    if (r < kE) return kInnerMass / (kE * 2.0 * kPi * r);
    return std::log(r) / (2.0 * kPi * r * r * r);
  }
  double true_spectral(const UnitDirection&) const override { return 1.0 / (2.0 * kPi); }
  Vec draw(Rng& rng) const override {
    const double u = rng.uniform();
    double r = 0.0;
    if (u < kInnerMass) {
      r = kE * u / kInnerMass;
    } else {
      // (1 + log r)/r = v  <=>  r = exp(-W_{-1}(-v/e) - 1)
      const double v = 1.0 - u;
      r = std::exp(-boost::math::lambert_wm1(-v / kE) - 1.0);
      r = std::max(r, kE);
    }
    return scaled(uniform_direction(rng, 2), r);
  }

 private:
  static constexpr double kInnerMass = 1.0 - 2.0 / kE;
};

// Integrate F(theta) over [0, 2 pi) adaptively.
template <class F>
double circle_integral(F&& f, double tol) {
  return detail::adaptive_gk(f, 0.0, 2.0 * kPi, tol).value;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cauchy2:
      return "cauchy2";
    case ModelKind::cauchy3:
      return "cauchy3";
    case ModelKind::elliptical:
      return "elliptical";
    case ModelKind::clover:
      return "clover";
    case ModelKind::asymm_shifted:
      return "asymm_shifted";
    case ModelKind::indep_t3:
      return "indep_t3";
    case ModelKind::logarithmic:
      return "logarithmic";
  }
  return "unknown";
}

ModelKind model_from_string(const std::string& name) {
  for (ModelKind k : all_models()) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kinds = {ModelKind::cauchy2,       ModelKind::cauchy3,  ModelKind::elliptical,
                                               ModelKind::clover,        ModelKind::asymm_shifted,
                                               ModelKind::indep_t3,      ModelKind::logarithmic};
  return kinds;
}

double elliptical_r0() {
  static const double r0 = bracketed_root(r0_equation_elliptical, 1.0, 1.5);
  return r0;
}

double asymmetric_r0() {
  static const double r0 = bracketed_root(r0_equation_asymmetric, 1.0, 1.5);
  return r0;
}

double elliptical_psi_constant() {
  static const double c = [] {
    const double mass = circle_integral(
        [](double t) {
          const double s = std::sin(t);
          return std::pow(1.0 + 3.0 * s * s, -2.5);
        },
        1e-14);
    return 1.0 / mass;
  }();
  return c;
}

const Model& model(ModelKind kind) {
  static const Cauchy2 cauchy2;
  static const Cauchy3 cauchy3;
  static const Elliptical elliptical;
  static const Clover clover;
  static const AsymmetricShifted asymm;
  static const IndependentT3 t3;
  static const Logarithmic logarithmic;
  switch (kind) {
    case ModelKind::cauchy2:
      return cauchy2;
    case ModelKind::cauchy3:
      return cauchy3;
    case ModelKind::elliptical:
      return elliptical;
    case ModelKind::clover:
      return clover;
    case ModelKind::asymm_shifted:
      return asymm;
    case ModelKind::indep_t3:
      return t3;
    case ModelKind::logarithmic:
      return logarithmic;
  }
  throw std::invalid_argument("unknown model kind");
}

const Model& model(const std::string& name) { return model(model_from_string(name)); }

Sample Model::sample(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  Sample s(dim());
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.push_back(draw(rng));
  return s;
}

double ray_mass(const Model& m, const UnitDirection& w, double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) throw std::invalid_argument("ray_mass: need 0 <= a <= b");
  if (a == b) return 0.0;
  const int d = m.dim();
  const double alpha = m.alpha();
  constexpr double kSplit = 1.0;
  constexpr double kTol = 1e-10;
  double total = 0.0;
  if (a < kSplit) {
    const double hi = std::min(b, kSplit);
    total += detail::adaptive_gk([&](double r) { return m.density(scaled(w, r)) * std::pow(r, d - 1); }, a, hi, kTol)
                 .value;
  }
  const double lo = std::max(a, kSplit);
  if (b > lo) {
    // r = s^{-1/alpha}: dr = r / (alpha s) ds, so the integrand is f r^d / (alpha s).
    const double s_hi = std::pow(lo, -alpha);
    const double s_lo = std::isinf(b) ? 0.0 : std::pow(b, -alpha);
    total += detail::adaptive_gk(
                 [&](double s) {
          if (s <= 0.0) return 0.0;
          const double r = std::pow(s, -1.0 / alpha);
          if (!std::isfinite(r)) return 0.0;
          return m.density(scaled(w, r)) * std::pow(r, d) / (alpha * s);
        },
                 s_lo, s_hi, kTol)
                 .value;
  }
  return total;
}

double level_crossing(const Model& m, const UnitDirection& w, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("level_crossing: beta must be positive");
  const auto f = [&](double r) { return m.density(scaled(w, r)); };
  constexpr double kMaxRadius = 1e250;
  // Walk outward until the density drops below beta and stays below over the
  // next decades.
  double hi = 1.0;
  while (true) {
    while (f(hi) >= beta) {
      hi *= 2.0;
      if (hi > kMaxRadius) throw EstimationError("true region", "density does not fall below the level");
    }
    bool stays_below = true;
    for (double r = hi * 2.0; r < hi * 1e4; r *= 2.0) {
      if (f(r) >= beta) {
        stays_below = false;
        hi = r;
        break;
      }
    }
    if (stays_below) break;
  }
  double lo = hi / 2.0;
  while (f(lo) < beta) {
    lo /= 2.0;
    if (lo < 1e-12) return 0.0;
  }
  const double log_beta = std::log(beta);
  const auto g = [&](double x) {
    const double v = f(std::exp(x));
    return v > 0.0 ? std::log(v) - log_beta : -1e300;
  };
  return std::exp(bracketed_root(g, std::log(lo), std::log(hi)));
}

namespace {

template <class RayFn>
double angular_integral(int d, const SphereGrid& grid, RayFn&& ray) {
  if (d == 2) {
    return circle_integral([&](double t) { return ray(UnitDirection::from_angle(t)); }, 1e-10);
  }
  return integrate(grid, ray);
}

}  // namespace

double level_set_probability(const Model& m, double beta, const SphereGrid& grid) {
  if (grid.dim() != m.dim()) throw std::invalid_argument("level_set_probability: grid dimension mismatch");
  return angular_integral(m.dim(), grid, [&](const UnitDirection& w) {
    return ray_mass(m, w, level_crossing(m, w, beta), std::numeric_limits<double>::infinity());
  });
}

double radial_survival(const Model& m, double t, const SphereGrid& grid) {
  if (grid.dim() != m.dim()) throw std::invalid_argument("radial_survival: grid dimension mismatch");
  return angular_integral(m.dim(), grid, [&](const UnitDirection& w) {
    return ray_mass(m, w, t, std::numeric_limits<double>::infinity());
  });
}

TrueRegionOracle true_region(const Model& m, double p, std::shared_ptr<const SphereGrid> grid) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("true_region: p must lie in (0, 1)");
  if (!grid || grid->dim() != m.dim()) throw std::invalid_argument("true_region: grid dimension mismatch");
  const double log_p = std::log(p);
  const auto g = [&](double log_beta) { return std::log(level_set_probability(m, std::exp(log_beta), *grid)) - log_p; };

  // Bracket log(beta) by decades, starting from the density scale at radius
  // U(1/p) ~ p^{-1/alpha}.
  double x0 = std::log(p) * (1.0 + m.dim() / m.alpha());
  double g0 = g(x0);
  double x1 = x0;
  double g1 = g0;
  const double step = std::log(10.0);
  for (int i = 0; i < 60 && (g0 < 0.0) == (g1 < 0.0); ++i) {
    x0 = x1;
    g0 = g1;
    x1 = g0 < 0.0 ? x1 + step : x1 - step;
    g1 = g(x1);
  }
  if ((g0 < 0.0) == (g1 < 0.0)) throw EstimationError("true region", "could not bracket the density level");
  const double lo = std::min(x0, x1);
  const double hi = std::max(x0, x1);
  const double glo = x0 < x1 ? g0 : g1;
  const double ghi = x0 < x1 ? g1 : g0;
  const double log_beta = toms748_root(g, lo, hi, glo, ghi);

  TrueRegionOracle oracle{&m, p, std::exp(log_beta), 0.0,
                          StarRegion(1.0, std::make_shared<const LevelSetProfile>(m, std::exp(log_beta)))};
  oracle.probability = level_set_probability(m, oracle.beta, *grid);
  RegionMeta meta;
  meta.kind = RegionKind::true_oracle;
  meta.method = "true";
  meta.p = p;
  meta.alpha_hat = m.alpha();
  oracle.region = StarRegion(1.0, oracle.region.profile_ptr(), meta);
  std::vector<double> base(grid->size());
  for (std::size_t j = 0; j < grid->size(); ++j) base[j] = level_crossing(m, grid->node(j), oracle.beta);
  oracle.region.set_cache(grid, std::move(base));
  return oracle;
}

}  // namespace riskregion
