#ifndef RISKREGION_SPHERE_HPP
#define RISKREGION_SPHERE_HPP

// Geometry and fixed quadrature on the unit circle (d=2) and the unit
// sphere (d=3).

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "riskregion/types.hpp"

namespace riskregion {

/// Surface measure of the whole sphere: 2*pi for d=2, 4*pi for d=3.
double sphere_measure(int d);

class UnitDirection {
 public:
  /// Normalizes x. Throws std::invalid_argument for the zero vector.
  static UnitDirection normalized(std::span<const double> x);
  static UnitDirection normalized(const Vec& x, int d) {
    return normalized(std::span<const double>(x.data(), static_cast<std::size_t>(d)));
  }
  static UnitDirection from_angle(double theta);
  static UnitDirection from_spherical(double polar, double azimuth);

  int dim() const noexcept { return dim_; }
  double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
  const Vec& coords() const noexcept { return c_; }
  double dot(const UnitDirection& o) const noexcept { return c_[0] * o.c_[0] + c_[1] * o.c_[1] + c_[2] * o.c_[2]; }
  /// Polar angle in [0, 2*pi) of a planar direction.
  double angle() const noexcept;

 private:
  UnitDirection(const Vec& c, int d) : c_(c), dim_(d) {}
  Vec c_{};
  int dim_ = 2;
};

/// The cap {v : center . v >= 1 - h}.
struct Cap {
  UnitDirection center;
  double h;

  bool contains(const UnitDirection& v) const noexcept { return center.dot(v) >= 1.0 - h; }
};

/// lambda(C_w(h)): 2*arccos(1-h) for d=2, 2*pi*h for d=3.
double cap_measure(double h, int d);
inline double cap_measure(const Cap& cap) { return cap_measure(cap.h, cap.center.dim()); }

/// Proper rotation of R^d. For d=2 only the upper-left 2x2 block is used.
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}
  static Rotation planar(double angle);
  /// Rotation about `axis` (need not be normalized) by `angle`.
  static Rotation axis_angle(const Vec& axis, double angle);

  Vec apply(const Vec& x) const noexcept;
  UnitDirection apply(const UnitDirection& w) const;
  Sample apply(const Sample& s) const;

 private:
  Eigen::Matrix3d m_;
};

/// Deterministic product quadrature on the sphere. Weights are in units of
/// surface measure and sum to sphere_measure(dim).
class SphereGrid {
 public:
  /// d=2: `resolution` equally spaced angles. d=3: `resolution` Gauss-Legendre
  /// nodes in cos(polar) times 2*`resolution` uniform azimuths.
  static SphereGrid make(int d, int resolution);
  static SphereGrid circle(int m);
  static SphereGrid sphere(int n_polar, int n_azimuth);
  /// 720 nodes for d=2, 48x96 for d=3.
  static SphereGrid standard(int d);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<UnitDirection>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const UnitDirection& node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  /// (theta) for d=2, (polar, azimuth) for d=3.
  const std::vector<std::array<double, 2>>& parameters() const noexcept { return params_; }

  /// Same weights, every node mapped through r.
  SphereGrid rotated(const Rotation& r) const;

 private:
  int dim_ = 2;
  std::vector<UnitDirection> nodes_;
  std::vector<double> weights_;
  std::vector<std::array<double, 2>> params_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// sum_i weight_i * f(node_i). Throws std::domain_error if f is not finite at
/// some node.
template <class F>
double integrate(const SphereGrid& grid, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid.node(i));
    if (!std::isfinite(v)) {
      throw std::domain_error("integrate: non-finite integrand at grid node " + std::to_string(i));
    }
    acc += grid.weight(i) * v;
  }
  return acc;
}

/// Quadrature of precomputed node values (same order as grid.nodes()).
double integrate_values(const SphereGrid& grid, std::span<const double> values);

}  // namespace riskregion

#endif  // RISKREGION_SPHERE_HPP
