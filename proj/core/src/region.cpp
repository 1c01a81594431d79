#include "riskregion/region.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "riskregion/table_io.hpp"

namespace riskregion {

std::string to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::estimated:
      return "estimated";
    case RegionKind::true_oracle:
      return "true-oracle";
    case RegionKind::comparator:
      return "comparator";
  }
  return "unknown";
}

StarRegion::StarRegion(double scale, std::shared_ptr<const RadialProfile> profile, RegionMeta meta)
    : scale_(scale), profile_(std::move(profile)), meta_(std::move(meta)) {
  if (!profile_) throw std::invalid_argument("StarRegion: missing radial profile");
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw std::invalid_argument("StarRegion: scale must be positive");
}

bool StarRegion::contains(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim()) throw std::invalid_argument("contains: dimension mismatch");
  const double r = norm(z);
  if (r == 0.0) return false;
  return r >= boundary_radius(UnitDirection::normalized(z)) * (1.0 - kBoundaryTolerance);
}

std::vector<double> StarRegion::base_radial_on(const SphereGrid& grid) const {
  if (grid.dim() != dim()) throw std::invalid_argument("base_radial_on: grid dimension mismatch");
  if (cache_grid_.get() == &grid && cache_values_.size() == grid.size()) return cache_values_;
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = profile_->base_radius(grid.node(j));
  return out;
}

std::vector<double> StarRegion::boundary_on(const SphereGrid& grid) const {
  auto out = base_radial_on(grid);
  for (double& v : out) v *= scale_;
  return out;
}

void StarRegion::set_cache(std::shared_ptr<const SphereGrid> grid, std::vector<double> base_values) {
  if (!grid || grid->size() != base_values.size()) throw std::invalid_argument("set_cache: size mismatch");
  cache_grid_ = std::move(grid);
  cache_values_ = std::move(base_values);
}

StarRegion StarRegion::with_scale(double scale, double p) const {
  StarRegion out = *this;
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("StarRegion: scale must be positive");
  out.scale_ = scale;
  out.meta_.p = p;
  return out;
}

SpectralProfile::SpectralProfile(std::shared_ptr<const SpectralEstimate> est, double alpha_hat, double level)
    : est_(std::move(est)), alpha_(alpha_hat), level_(level) {
  if (!est_) throw std::invalid_argument("SpectralProfile: missing estimate");
  if (!(alpha_ > 0.0)) throw std::invalid_argument("SpectralProfile: alpha_hat must be positive");
  if (!(level_ > 0.0)) throw std::invalid_argument("SpectralProfile: level must be positive");
}

double SpectralProfile::base_radius(const UnitDirection& w) const {
  return s_radial(est_->psi_hat(w) / level_, alpha_, est_->dim());
}

DensityProfile::DensityProfile(int d, double alpha, std::function<double(const UnitDirection&)> psi)
    : d_(d), alpha_(alpha), psi_(std::move(psi)) {
  check_dimension(d);
  if (!(alpha_ > 0.0)) throw std::invalid_argument("DensityProfile: alpha must be positive");
}

double default_bandwidth(int d) {
  check_dimension(d);
  return d == 2 ? 0.4 : 0.5;
}

double RegionFit::scale(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("region: p must lie in (0, 1)");
  const double inflation = static_cast<double>(tail_.k_u) * nu_s_ / (static_cast<double>(n_) * p);
  return tail_.u_hat * std::pow(inflation, 1.0 / tail_.alpha_hat);
}

StarRegion RegionFit::region(double p) const {
  RegionMeta meta;
  meta.kind = RegionKind::estimated;
  meta.method = "evt";
  meta.p = p;
  meta.k_alpha = tail_.k_alpha;
  meta.k_u = tail_.k_u;
  meta.k_psi = params_.k_psi;
  meta.h = params_.h;
  meta.alpha_hat = tail_.alpha_hat;
  meta.nu_s = nu_s_;
  meta.estimator = to_string(params_.estimator);
  meta.kernel = params_.kernel.name();
  StarRegion r(scale(p), profile_, std::move(meta));
  r.set_cache(grid_, base_values_);
  return r;
}

PValue RegionFit::p_value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("p_value: dimension mismatch");
  const double r = norm(x);
  if (r == 0.0) throw std::invalid_argument("p_value: undefined at the origin");
  const double base = profile_->base_radius(UnitDirection::normalized(x));
  if (base == 0.0) return {0.0, true};
  const double lead = static_cast<double>(tail_.k_u) * nu_s_ / static_cast<double>(n_);
  return {lead * std::pow(tail_.u_hat * base / r, tail_.alpha_hat), false};
}

std::vector<RankedObservation> RegionFit::rank_extremes(const Sample& sample, std::size_t m) const {
  if (sample.dim() != dim()) throw std::invalid_argument("rank_extremes: dimension mismatch");
  if (m > sample.size()) throw std::invalid_argument("rank_extremes: m exceeds the sample size");
  std::vector<RankedObservation> all;
  all.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto x = sample.row(i);
    if (norm(x) == 0.0) continue;
    const PValue pv = p_value(x);
    all.push_back({i, pv.value, pv.degenerate_ray});
  }
  const auto by_p = [](const RankedObservation& a, const RankedObservation& b) {
    return a.p_value < b.p_value || (a.p_value == b.p_value && a.index < b.index);
  };
  const std::size_t take = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), by_p);
  all.resize(take);
  return all;
}

RegionFit fit_region(const Sample& sample, const FitParams& params, std::shared_ptr<const SphereGrid> grid) {
  if (!grid) throw std::invalid_argument("fit_region: missing grid");
  if (grid->dim() != sample.dim()) throw std::invalid_argument("fit_region: grid dimension mismatch");
  if (!(params.level > 0.0)) throw std::invalid_argument("fit_region: level must be positive");
  RegionFit fit;
  fit.params_ = params;
  fit.n_ = sample.size();
  fit.grid_ = grid;
  fit.tail_ = fit_tail(sample.radii(), params.k_alpha, params.k_u, params.estimator);
  fit.spectral_ = std::make_shared<const SpectralEstimate>(fit_spectral(sample, params.k_psi, params.h, params.kernel));

  // S = {q <= level}: base radii from psi/level, nu(S) = level * nu-formula(psi/level).
  std::vector<double> psi = fit.spectral_->psi_on(*grid);
  for (double& v : psi) v /= params.level;
  fit.nu_s_ = params.level * nu_s_from_values(*grid, psi, fit.tail_.alpha_hat);
  fit.base_values_.resize(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    fit.base_values_[j] = s_radial(psi[j], fit.tail_.alpha_hat, sample.dim());
  }
  fit.profile_ = std::make_shared<const SpectralProfile>(fit.spectral_, fit.tail_.alpha_hat, params.level);
  return fit;
}

StarRegion estimate_region(const Sample& sample, double p, const FitParams& params,
                           std::shared_ptr<const SphereGrid> grid) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("estimate_region: p must lie in (0, 1)");
  return fit_region(sample, params, std::move(grid)).region(p);
}

AutoSelection select_parameters(const Sample& sample, const AutoOptions& options, const SphereGrid& grid) {
  AutoSelection sel;
  const std::size_t n = sample.size();
  const std::vector<std::size_t> ks = options.k_grid.empty() ? default_rank_grid(n) : options.k_grid;
  const std::vector<double> radii = sample.radii();
  FitParams& fp = sel.params;
  fp.estimator = options.estimator;
  fp.kernel = options.kernel;
  fp.h = options.h.value_or(default_bandwidth(sample.dim()));

  if (options.k_alpha) {
    fp.k_alpha = *options.k_alpha;
  } else {
    sel.alpha_scan = scan_gamma(radii, options.estimator, ks, options.alpha_scan);
    fp.k_alpha = sel.alpha_scan->selected_k;
  }
  const DescendingRadii sorted(radii);
  const double gamma = sorted.gamma(options.estimator, fp.k_alpha);
  if (!(gamma > 0.0)) {
    throw EstimationError("tail index", "selected extreme-value index " + std::to_string(gamma) +
                                            " is not positive at k=" + std::to_string(fp.k_alpha));
  }
  const double alpha = 1.0 / gamma;

  if (options.k_u) {
    fp.k_u = *options.k_u;
  } else {
    sel.u_scan = scan_scaled_u(radii, alpha, ks, options.u_scan);
    fp.k_u = sel.u_scan->selected_k;
  }
  if (options.k_psi) {
    fp.k_psi = *options.k_psi;
  } else {
    sel.nu_scan = scan_nu_s(sample, alpha, fp.h, fp.kernel, ks, grid, options.nu_scan);
    fp.k_psi = sel.nu_scan->selected_k;
  }
  return sel;
}

void export_boundary(std::ostream& os, const StarRegion& region, const SphereGrid& grid) {
  if (grid.dim() != region.dim()) throw std::invalid_argument("export_boundary: grid dimension mismatch");
  const RegionMeta& m = region.meta();
  os << "# kind: " << to_string(m.kind) << "\n";
  os << "# method: " << m.method << "\n";
  os << "# p: " << format_number(m.p) << "\n";
  os << "# scale: " << format_number(region.scale()) << "\n";
  os << "# k_alpha: " << m.k_alpha << "\n";
  os << "# k_u: " << m.k_u << "\n";
  os << "# k_psi: " << m.k_psi << "\n";
  os << "# h: " << format_number(m.h) << "\n";
  os << "# alpha_hat: " << format_number(m.alpha_hat) << "\n";
  os << "# nu_s: " << format_number(m.nu_s) << "\n";
  if (!m.estimator.empty()) os << "# estimator: " << m.estimator << "\n";
  if (!m.kernel.empty()) os << "# kernel: " << m.kernel << "\n";
  os << (grid.dim() == 2 ? "theta,r,x,y\n" : "polar,azimuth,r,x,y,z\n");
  const auto radii = region.boundary_on(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto& prm = grid.parameters()[j];
    const auto& w = grid.node(j);
    os << format_number(prm[0]);
    if (grid.dim() == 3) os << ',' << format_number(prm[1]);
    os << ',' << format_number(radii[j]);
    for (int c = 0; c < grid.dim(); ++c) os << ',' << format_number(radii[j] * w[c]);
    os << '\n';
  }
}

int read_boundary(std::istream& is, std::vector<BoundaryRow>& rows) {
  const NumericTable t = read_table(is);
  int d = 0;
  if (t.columns() == 4) {
    d = 2;
  } else if (t.columns() == 6) {
    d = 3;
  } else {
    throw std::runtime_error("read_boundary: expected 4 (d=2) or 6 (d=3) columns");
  }
  rows.clear();
  for (const auto& r : t.rows) {
    BoundaryRow b;
    if (d == 2) {
      b.parameters = {r[0], 0.0};
      b.radius = r[1];
      b.point = {r[2], r[3], 0.0};
    } else {
      b.parameters = {r[0], r[1]};
      b.radius = r[2];
      b.point = {r[3], r[4], r[5]};
    }
    rows.push_back(b);
  }
  return d;
}

}  // namespace riskregion
