#include "riskregion/spectral.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "quadrature.hpp"


namespace riskregion {

Kernel::Kernel(std::string name, std::function<double(double)> fn) : name_(std::move(name)), fn_(std::move(fn)) {
  if (!fn_) throw std::invalid_argument("Kernel: empty function");
  constexpr int kChecks = 1000;
  const double k0 = fn_(0.0);
  const double k1 = fn_(1.0);
  if (std::abs(k0 - 1.0) > 1e-12 || std::abs(k1) > 1e-12) {
    throw std::invalid_argument("Kernel '" + name_ + "': requires K(0)=1 and K(1)=0");
  }
  double prev = k0;
  for (int i = 1; i <= kChecks; ++i) {
    const double v = fn_(static_cast<double>(i) / kChecks);
    if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12) {
      throw std::invalid_argument("Kernel '" + name_ + "': values must lie in [0,1]");
    }
    if (v > prev + 1e-12) throw std::invalid_argument("Kernel '" + name_ + "': must be nonincreasing");
    if (std::abs(v - prev) > 0.25) throw std::invalid_argument("Kernel '" + name_ + "': appears discontinuous");
    prev = v;
  }
}

Kernel Kernel::linear() {
  return Kernel("linear", [](double u) { return 1.0 - u; });
}

Kernel Kernel::quadratic() {
  return Kernel("quadratic", [](double u) { return 1.0 - u * u; });
}

Kernel Kernel::from_name(const std::string& name) {
  if (name == "linear") return linear();
  if (name == "quadratic") return quadratic();
  throw std::invalid_argument("unknown kernel '" + name + "' (expected linear or quadratic)");
}

double cap_kernel_mass(double h, const Kernel& kernel, int d) {
  check_dimension(d);
  if (!(h > 0.0) || h > 2.0) throw std::invalid_argument("cap kernel mass: h must lie in (0, 2]");
  // Surface measure of S^{d-2}: 2 for d=2, 2*pi for d=3.
  const double ring = 2.0 * std::pow(std::numbers::pi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1));
  const double phi0 = std::acos(1.0 - h);
  const auto integrand = [&](double phi) {
    const double k = kernel((1.0 - std::cos(phi)) / h);
    return d == 2 ? k : k * std::sin(phi);
  };
  return ring * detail::adaptive_gk(integrand, 0.0, phi0, 1e-13).value;
}

double c_norm(double h, const Kernel& kernel, int d) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("c_norm: bandwidth h must lie in (0, 1)");
  return 1.0 / cap_kernel_mass(h, kernel, d);
}

SpectralEstimate fit_spectral(const Sample& sample, std::size_t k_psi, double h, const Kernel& kernel) {
  const std::size_t n = sample.size();
  if (k_psi < 1 || k_psi >= n) {
    throw std::invalid_argument("fit_spectral: k_psi=" + std::to_string(k_psi) + " outside [1, n-1]");
  }
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("fit_spectral: bandwidth h must lie in (0, 1)");
  const std::vector<double> radii = sample.radii();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(radii[i] > 0.0)) {
      throw std::invalid_argument("fit_spectral: observation " + std::to_string(i) + " is the zero vector");
    }
  }
  SpectralEstimate est(kernel);
  est.dim_ = sample.dim();
  est.n_ = n;
  est.k_psi_ = k_psi;
  est.h_ = h;
  est.c_norm_ = c_norm(h, kernel, sample.dim());
  est.threshold_ = scale_u_hat(radii, k_psi);
  est.flags_.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (radii[i] > est.threshold_) {
      est.flags_[i] = true;
      est.included_.push_back(UnitDirection::normalized(sample.row(i)));
    }
  }
  return est;
}

double SpectralEstimate::psi_hat(const UnitDirection& w) const {
  if (w.dim() != dim_) throw std::invalid_argument("psi_hat: direction dimension mismatch");
  const double lo = 1.0 - h_;
  double acc = 0.0;
  for (const auto& v : included_) {
    const double t = w.dot(v);
    if (t >= lo) acc += kernel_((1.0 - t) / h_);
  }
  return c_norm_ * acc / static_cast<double>(k_psi_);
}

std::vector<double> SpectralEstimate::psi_on(const SphereGrid& grid) const {
  if (grid.dim() != dim_) throw std::invalid_argument("psi_on: grid dimension mismatch");
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = psi_hat(grid.node(j));
  return out;
}

double s_radial(double psi, double alpha_hat, int d) {
  if (!(alpha_hat > 0.0)) throw std::invalid_argument("s_radial: alpha_hat must be positive");
  if (psi < 0.0) throw std::invalid_argument("s_radial: negative density value");
  if (psi == 0.0) return 0.0;
  return std::pow(alpha_hat * psi, 1.0 / (alpha_hat + d));
}

double nu_s_from_values(const SphereGrid& grid, std::span<const double> psi_values, double alpha_hat) {
  if (!(alpha_hat > 0.0)) throw std::invalid_argument("nu_s: alpha_hat must be positive");
  if (psi_values.size() != grid.size()) throw std::invalid_argument("nu_s: grid/value size mismatch");
  const int d = grid.dim();
  const double expo = d / (alpha_hat + d);
  double acc = 0.0;
  bool any_positive = false;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = psi_values[j];
    if (!std::isfinite(v) || v < 0.0) throw std::domain_error("nu_s: invalid density value at grid node");
    if (v > 0.0) {
      any_positive = true;
      acc += grid.weight(j) * std::pow(v, expo);
    }
  }
  if (!any_positive) {
    throw EstimationError("spectral density", "estimate vanishes on every grid node; nu(S) is degenerate");
  }
  return std::pow(alpha_hat, -alpha_hat / (alpha_hat + d)) * acc;
}

double nu_s_hat(const SpectralEstimate& est, double alpha_hat, const SphereGrid& grid) {
  return nu_s_from_values(grid, est.psi_on(grid), alpha_hat);
}

StabilityScan scan_nu_s(const Sample& sample, double alpha_hat, double h, const Kernel& kernel,
                        const std::vector<std::size_t>& k_grid, const SphereGrid& grid, const ScanOptions& options) {
  if (grid.dim() != sample.dim()) throw std::invalid_argument("nu_s scan: grid dimension mismatch");
  const std::size_t n = sample.size();
  const std::vector<double> radii = sample.radii();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return radii[a] > radii[b]; });

  const double c = c_norm(h, kernel, sample.dim());
  const double lo = 1.0 - h;
  std::vector<double> sums(grid.size(), 0.0);
  std::vector<double> psi(grid.size());
  std::vector<double> est;
  est.reserve(k_grid.size());
  std::size_t added = 0;
  for (std::size_t k : k_grid) {
    if (k < 1 || k >= n) throw std::invalid_argument("nu_s scan: rank outside [1, n-1]");
    const double threshold = radii[order[k]];
    while (added < n && radii[order[added]] > threshold) {
      const auto w = UnitDirection::normalized(sample.row(order[added]));
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid.node(j).dot(w);
        if (t >= lo) sums[j] += kernel((1.0 - t) / h);
      }
      ++added;
    }
    for (std::size_t j = 0; j < grid.size(); ++j) psi[j] = c * sums[j] / static_cast<double>(k);
    try {
      est.push_back(nu_s_from_values(grid, psi, alpha_hat));
    } catch (const EstimationError&) {
      est.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return select_stable_window("nu_s", k_grid, std::move(est), options);
}

}  // namespace riskregion
