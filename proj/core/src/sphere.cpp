#include "riskregion/sphere.hpp"

#include <Eigen/Geometry>
#include <numbers>

namespace riskregion {

namespace {
constexpr double kPi = std::numbers::pi;
}

double sphere_measure(int d) {
  check_dimension(d);
  return d == 2 ? 2.0 * kPi : 4.0 * kPi;
}

UnitDirection UnitDirection::normalized(std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  check_dimension(d);
  const double r = norm(x);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("UnitDirection: direction of a zero or non-finite vector is undefined");
  }
  Vec c{0.0, 0.0, 0.0};
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] / r;
  return UnitDirection(c, d);
}

UnitDirection UnitDirection::from_angle(double theta) {
  return UnitDirection(Vec{std::cos(theta), std::sin(theta), 0.0}, 2);
}

UnitDirection UnitDirection::from_spherical(double polar, double azimuth) {
  const double s = std::sin(polar);
  return UnitDirection(Vec{s * std::cos(azimuth), s * std::sin(azimuth), std::cos(polar)}, 3);
}

double UnitDirection::angle() const noexcept {
  double t = std::atan2(c_[1], c_[0]);
  if (t < 0.0) t += 2.0 * kPi;
  return t;
}

double cap_measure(double h, int d) {
  if (!(h > 0.0) || h > 2.0) {
    throw std::invalid_argument("cap_measure: h must lie in (0, 2]");
  }
  check_dimension(d);
  if (d == 2) return 2.0 * std::acos(1.0 - h);
  return 2.0 * kPi * h;
}

Rotation Rotation::planar(double angle) {
  Rotation r;
  r.m_ = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return r;
}

Rotation Rotation::axis_angle(const Vec& axis, double angle) {
  Eigen::Vector3d a(axis[0], axis[1], axis[2]);
  if (a.norm() == 0.0) throw std::invalid_argument("Rotation: zero axis");
  Rotation r;
  r.m_ = Eigen::AngleAxisd(angle, a.normalized()).toRotationMatrix();
  return r;
}

Vec Rotation::apply(const Vec& x) const noexcept {
  const Eigen::Vector3d y = m_ * Eigen::Vector3d(x[0], x[1], x[2]);
  return {y[0], y[1], y[2]};
}

UnitDirection Rotation::apply(const UnitDirection& w) const {
  return UnitDirection::normalized(apply(w.coords()), w.dim());
}

Sample Rotation::apply(const Sample& s) const {
  Sample out(s.dim());
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(apply(s.point(i)));
  return out;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  // Legendre P_n and its derivative at x by the three-term recurrence.
  const auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    return std::array<double, 2>{p1, dp};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double dp = legendre(x)[1];
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = -x;
    nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
}

SphereGrid SphereGrid::circle(int m) {
  if (m < 16) throw std::invalid_argument("SphereGrid: resolution must be at least 16");
  SphereGrid g;
  g.dim_ = 2;
  g.nodes_.reserve(static_cast<std::size_t>(m));
  const double w = 2.0 * kPi / m;
  for (int j = 0; j < m; ++j) {
    const double theta = 2.0 * kPi * j / m;
    g.nodes_.push_back(UnitDirection::from_angle(theta));
    g.weights_.push_back(w);
    g.params_.push_back({theta, 0.0});
  }
  return g;
}

SphereGrid SphereGrid::sphere(int n_polar, int n_azimuth) {
  if (n_polar < 16 || n_azimuth < 16) throw std::invalid_argument("SphereGrid: resolution must be at least 16");
  std::vector<double> t;
  std::vector<double> wt;
  gauss_legendre(n_polar, t, wt);
  SphereGrid g;
  g.dim_ = 3;
  const double daz = 2.0 * kPi / n_azimuth;
  for (int i = 0; i < n_polar; ++i) {
    const double polar = std::acos(t[static_cast<std::size_t>(i)]);
    for (int j = 0; j < n_azimuth; ++j) {
      const double az = daz * j;
      g.nodes_.push_back(UnitDirection::from_spherical(polar, az));
      g.weights_.push_back(wt[static_cast<std::size_t>(i)] * daz);
      g.params_.push_back({polar, az});
    }
  }
  return g;
}

SphereGrid SphereGrid::make(int d, int resolution) {
  check_dimension(d);
  return d == 2 ? circle(resolution) : sphere(resolution, 2 * resolution);
}

SphereGrid SphereGrid::standard(int d) { return make(d, d == 2 ? 720 : 48); }

SphereGrid SphereGrid::rotated(const Rotation& r) const {
  SphereGrid g = *this;
  for (auto& n : g.nodes_) n = r.apply(n);
  return g;
}

double integrate_values(const SphereGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("integrate_values: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::domain_error("integrate: non-finite integrand at grid node " + std::to_string(i));
    }
    acc += grid.weight(i) * values[i];
  }
  return acc;
}

}  // namespace riskregion
