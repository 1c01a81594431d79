#ifndef RISKREGION_REGION_HPP
#define RISKREGION_REGION_HPP

// Star-shaped extreme risk regions {r w : r >= scale * base(w)} and their
// estimation from a sample: assembly from the tail fit and the spectral
// estimate, membership, p-values, ranking and boundary export.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskregion/spectral.hpp"
#include "riskregion/sphere.hpp"
#include "riskregion/tailfit.hpp"
#include "riskregion/types.hpp"

namespace riskregion {

/// Direction -> nonnegative base radius.
class RadialProfile {
 public:
  virtual ~RadialProfile() = default;
  virtual int dim() const = 0;
  virtual double base_radius(const UnitDirection& w) const = 0;
};

enum class RegionKind { estimated, true_oracle, comparator };
std::string to_string(RegionKind kind);

struct RegionMeta {
  RegionKind kind = RegionKind::estimated;
  std::string method = "evt";
  double p = 0.0;
  std::size_t k_alpha = 0;
  std::size_t k_u = 0;
  std::size_t k_psi = 0;
  double h = 0.0;
  double alpha_hat = 0.0;
  double nu_s = 0.0;
  std::string estimator;
  std::string kernel;
};

class StarRegion {
 public:
  StarRegion(double scale, std::shared_ptr<const RadialProfile> profile, RegionMeta meta = {});

  int dim() const noexcept { return profile_->dim(); }
  double scale() const noexcept { return scale_; }
  const RegionMeta& meta() const noexcept { return meta_; }
  const RadialProfile& profile() const noexcept { return *profile_; }
  std::shared_ptr<const RadialProfile> profile_ptr() const noexcept { return profile_; }

  double base_radial(const UnitDirection& w) const { return profile_->base_radius(w); }
  double boundary_radius(const UnitDirection& w) const { return scale_ * base_radial(w); }

  /// Relative slack on the boundary so that exported boundary points, which
  /// carry rounding in both radius and direction, test as contained.
  static constexpr double kBoundaryTolerance = 1e-12;

  /// ||z|| >= scale * base(z/||z||) up to kBoundaryTolerance. The origin is
  /// never contained.
  bool contains(std::span<const double> z) const;

  /// Base radii at the grid nodes; served from the cache when `grid` is the
  /// grid the region was built with.
  std::vector<double> base_radial_on(const SphereGrid& grid) const;
  std::vector<double> boundary_on(const SphereGrid& grid) const;

  /// Attach cached base radii for `grid` (values in node order).
  void set_cache(std::shared_ptr<const SphereGrid> grid, std::vector<double> base_values);

  StarRegion with_scale(double scale, double p) const;

 private:
  double scale_;
  std::shared_ptr<const RadialProfile> profile_;
  RegionMeta meta_;
  std::shared_ptr<const SphereGrid> cache_grid_;
  std::vector<double> cache_values_;
};

/// Base radius (alpha * psi_hat(w) / level)^{1/(alpha+d)} of the estimated
/// base set {q <= level}.
class SpectralProfile final : public RadialProfile {
 public:
  SpectralProfile(std::shared_ptr<const SpectralEstimate> est, double alpha_hat, double level = 1.0);
  int dim() const override { return est_->dim(); }
  double base_radius(const UnitDirection& w) const override;
  const SpectralEstimate& estimate() const noexcept { return *est_; }

 private:
  std::shared_ptr<const SpectralEstimate> est_;
  double alpha_;
  double level_;
};

/// Radius (alpha * psi(w))^{1/(alpha+d)} for a known density psi.
class DensityProfile final : public RadialProfile {
 public:
  DensityProfile(int d, double alpha, std::function<double(const UnitDirection&)> psi);
  int dim() const override { return d_; }
  double base_radius(const UnitDirection& w) const override { return s_radial(psi_(w), alpha_, d_); }

 private:
  int d_;
  double alpha_;
  std::function<double(const UnitDirection&)> psi_;
};

class ConstantProfile final : public RadialProfile {
 public:
  ConstantProfile(int d, double radius) : d_(d), radius_(radius) {}
  int dim() const override { return d_; }
  double base_radius(const UnitDirection&) const override { return radius_; }

 private:
  int d_;
  double radius_;
};

struct FitParams {
  std::size_t k_alpha = 0;
  std::size_t k_u = 0;
  std::size_t k_psi = 0;
  double h = 0.4;
  TailEstimator estimator = TailEstimator::moment;
  Kernel kernel = Kernel::linear();
  /// The constant c in S = {q <= c}; the region does not depend on it.
  double level = 1.0;
};

/// 0.4 for d=2, 0.5 for d=3.
double default_bandwidth(int d);

struct PValue {
  double value = 0.0;
  /// The base radius vanishes along x's direction: x lies in every region.
  bool degenerate_ray = false;
};

struct RankedObservation {
  std::size_t index = 0;
  double p_value = 0.0;
  bool degenerate_ray = false;
};

/// Everything estimated from one sample that the region depends on; regions
/// for any p are obtained without refitting.
class RegionFit {
 public:
  const TailFit& tail() const noexcept { return tail_; }
  const SpectralEstimate& spectral() const noexcept { return *spectral_; }
  double nu_s() const noexcept { return nu_s_; }
  std::size_t n() const noexcept { return n_; }
  int dim() const noexcept { return spectral_->dim(); }
  const FitParams& params() const noexcept { return params_; }
  const SphereGrid& grid() const noexcept { return *grid_; }
  std::shared_ptr<const RadialProfile> profile() const noexcept { return profile_; }

  /// U_hat(n/k_U) (k_U nu_hat(S) / (n p))^{1/alpha_hat}.
  double scale(double p) const;
  StarRegion region(double p) const;

  /// Smallest p for which x lies in the estimated region:
  /// (k_U nu/n) (U base(x/||x||) / ||x||)^alpha.
  PValue p_value(std::span<const double> x) const;

  /// The m observations with the smallest p-values, ascending, ties by index.
  std::vector<RankedObservation> rank_extremes(const Sample& sample, std::size_t m) const;

 private:
  friend RegionFit fit_region(const Sample&, const FitParams&, std::shared_ptr<const SphereGrid>);
  TailFit tail_;
  std::shared_ptr<const SpectralEstimate> spectral_;
  std::shared_ptr<const RadialProfile> profile_;
  std::shared_ptr<const SphereGrid> grid_;
  std::vector<double> base_values_;
  double nu_s_ = 0.0;
  std::size_t n_ = 0;
  FitParams params_;
};

RegionFit fit_region(const Sample& sample, const FitParams& params, std::shared_ptr<const SphereGrid> grid);

StarRegion estimate_region(const Sample& sample, double p, const FitParams& params,
                           std::shared_ptr<const SphereGrid> grid);

struct AutoOptions {
  TailEstimator estimator = TailEstimator::moment;
  std::optional<double> h;
  Kernel kernel = Kernel::linear();
  /// The tail-index plot is noisy at small k, so the flattest stable window
  /// wins. The extrapolation plot drifts with k and its first flat stretch is
  /// taken over a longer, tighter window.
  ScanOptions alpha_scan{.selection = ScanOptions::Selection::min_sd};
  ScanOptions u_scan{.window = 30, .max_relative_spread = 0.05, .selection = ScanOptions::Selection::first};
  ScanOptions nu_scan;
  /// Empty means default_rank_grid(n).
  std::vector<std::size_t> k_grid;
  std::optional<std::size_t> k_alpha;
  std::optional<std::size_t> k_u;
  std::optional<std::size_t> k_psi;
};

struct AutoSelection {
  FitParams params;
  std::optional<StabilityScan> alpha_scan;
  std::optional<StabilityScan> u_scan;
  std::optional<StabilityScan> nu_scan;
};

/// Chooses k_alpha from a stable region of the tail-index plot, then
/// k_U from the plot of U_hat(n/k)(k/n)^{1/alpha_hat}, then k_psi from the
/// nu_hat(S) plot. Explicit overrides skip the corresponding scan.
AutoSelection select_parameters(const Sample& sample, const AutoOptions& options, const SphereGrid& grid);

struct BoundaryRow {
  std::array<double, 2> parameters{};
  double radius = 0.0;
  Vec point{};
};

/// One row per grid node: theta,r,x,y (d=2) or polar,azimuth,r,x,y,z (d=3),
/// preceded by '#' comment lines recording the region metadata.
void export_boundary(std::ostream& os, const StarRegion& region, const SphereGrid& grid);

/// Reads a table written by export_boundary. Returns the dimension.
int read_boundary(std::istream& is, std::vector<BoundaryRow>& rows);

}  // namespace riskregion

#endif  // RISKREGION_REGION_HPP
