#ifndef RISKREGION_SPECTRAL_HPP
#define RISKREGION_SPECTRAL_HPP

// Kernel estimation of the spectral density psi on the unit sphere from the
// k largest observations, and the quantities derived from it: the base set
// radial function and nu(S).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "riskregion/sphere.hpp"
#include "riskregion/tailfit.hpp"
#include "riskregion/types.hpp"

namespace riskregion {

/// Continuous nonincreasing K : [0,1] -> [0,1] with K(0)=1 and K(1)=0.
class Kernel {
 public:
  /// Validates the contract on a dense grid; throws std::invalid_argument.
  Kernel(std::string name, std::function<double(double)> fn);

  /// K(u) = 1 - u.
  static Kernel linear();
  /// K(u) = 1 - u^2.
  static Kernel quadratic();
  static Kernel from_name(const std::string& name);

  const std::string& name() const noexcept { return name_; }
  /// K(u) for u in [0,1]; zero for u > 1.
  double operator()(double u) const { return u > 1.0 ? 0.0 : fn_(u < 0.0 ? 0.0 : u); }

 private:
  std::string name_;
  std::function<double(double)> fn_;
};

/// c(h,K) = 1 / integral over C_w(h) of K((1 - v.w)/h) dlambda(v), evaluated
/// through the one-dimensional polar-angle form.
double c_norm(double h, const Kernel& kernel, int d);

/// Same integral without the range check on h, for h in (0, 2].
double cap_kernel_mass(double h, const Kernel& kernel, int d);

class SpectralEstimate {
 public:
  int dim() const noexcept { return dim_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t k_psi() const noexcept { return k_psi_; }
  /// Observations strictly above R_{n-k:n}; smaller than k_psi only under ties.
  std::size_t included_count() const noexcept { return included_.size(); }
  double h() const noexcept { return h_; }
  double c_norm() const noexcept { return c_norm_; }
  double threshold_radius() const noexcept { return threshold_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  const std::vector<UnitDirection>& included_directions() const noexcept { return included_; }
  /// Inclusion flag per input observation, in input order.
  const std::vector<bool>& inclusion_flags() const noexcept { return flags_; }

  /// (c(h,K)/k) sum_i K((1 - w.W_i)/h) 1[R_i > R_{n-k:n}].
  double psi_hat(const UnitDirection& w) const;
  std::vector<double> psi_on(const SphereGrid& grid) const;

 private:
  friend SpectralEstimate fit_spectral(const Sample&, std::size_t, double, const Kernel&);
  explicit SpectralEstimate(const Kernel& kernel) : kernel_(kernel) {}

  int dim_ = 2;
  std::size_t n_ = 0;
  std::size_t k_psi_ = 0;
  double h_ = 0.0;
  double c_norm_ = 0.0;
  double threshold_ = 0.0;
  Kernel kernel_;
  std::vector<UnitDirection> included_;
  std::vector<bool> flags_;
};

/// Throws std::invalid_argument for zero vectors, k_psi outside [1, n-1] or h
/// outside (0,1).
SpectralEstimate fit_spectral(const Sample& sample, std::size_t k_psi, double h, const Kernel& kernel);

/// (alpha psi)^{1/(alpha+d)}, zero when psi is zero.
double s_radial(double psi, double alpha_hat, int d);

/// alpha^{-alpha/(alpha+d)} * integral of psi^{d/(alpha+d)} over the sphere,
/// from psi values at the grid nodes. Throws EstimationError if every value is
/// zero.
double nu_s_from_values(const SphereGrid& grid, std::span<const double> psi_values, double alpha_hat);

double nu_s_hat(const SpectralEstimate& est, double alpha_hat, const SphereGrid& grid);

/// nu_hat(S) as a function of k_psi with alpha, h and the kernel fixed.
/// Kernel sums are accumulated incrementally in decreasing radius order.
StabilityScan scan_nu_s(const Sample& sample, double alpha_hat, double h, const Kernel& kernel,
                        const std::vector<std::size_t>& k_grid, const SphereGrid& grid,
                        const ScanOptions& options = {});

}  // namespace riskregion

#endif  // RISKREGION_SPECTRAL_HPP
