#include "riskregion/tailfit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "riskregion/types.hpp"

namespace riskregion {

std::string to_string(TailEstimator e) { return e == TailEstimator::hill ? "hill" : "moment"; }

TailEstimator tail_estimator_from_string(const std::string& s) {
  if (s == "hill") return TailEstimator::hill;
  if (s == "moment") return TailEstimator::moment;
  throw std::invalid_argument("unknown tail estimator '" + s + "' (expected moment or hill)");
}

DescendingRadii::DescendingRadii(std::span<const double> radii) : r_(radii.begin(), radii.end()) {
  for (double r : r_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radii must be positive and finite");
  }
  std::stable_sort(r_.begin(), r_.end(), std::greater<>());
}

void DescendingRadii::check_rank(std::size_t k) const {
  if (k < 1 || k >= r_.size()) {
    throw std::invalid_argument("rank k=" + std::to_string(k) + " outside [1, n-1] for n=" +
                                std::to_string(r_.size()));
  }
}

double DescendingRadii::threshold(std::size_t k) const {
  check_rank(k);
  return r_[k];
}

double DescendingRadii::hill(std::size_t k) const {
  check_rank(k);
  const double base = r_[k];
  double m1 = 0.0;
  for (std::size_t i = 0; i < k; ++i) m1 += std::log(r_[i] / base);
  return m1 / static_cast<double>(k);
}

double DescendingRadii::moment(std::size_t k) const {
  check_rank(k);
  const double base = r_[k];
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double l = std::log(r_[i] / base);
    m1 += l;
    m2 += l * l;
  }
  m1 /= static_cast<double>(k);
  m2 /= static_cast<double>(k);
  if (!(m2 > m1 * m1)) {
    throw EstimationError("moment estimator", "degenerate log-spacings (M2 <= M1^2) at k=" + std::to_string(k));
  }
  return m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2);
}

double hill(std::span<const double> radii, std::size_t k) { return DescendingRadii(radii).hill(k); }

double moment_estimator(std::span<const double> radii, std::size_t k) {
  return DescendingRadii(radii).moment(k);
}

double scale_u_hat(std::span<const double> radii, std::size_t k) { return DescendingRadii(radii).threshold(k); }

TailFit fit_tail(std::span<const double> radii, std::size_t k_alpha, std::size_t k_u, TailEstimator estimator) {
  const DescendingRadii sorted(radii);
  TailFit fit;
  fit.estimator = estimator;
  fit.k_alpha = k_alpha;
  fit.k_u = k_u;
  fit.gamma_hat = sorted.gamma(estimator, k_alpha);
  if (!(fit.gamma_hat > 0.0)) {
    throw EstimationError("tail index", "extreme-value index estimate " + std::to_string(fit.gamma_hat) +
                                            " is not positive; the region requires a heavy tail");
  }
  fit.alpha_hat = 1.0 / fit.gamma_hat;
  fit.u_hat = sorted.threshold(k_u);
  return fit;
}

StabilityScan select_stable_window(std::string statistic, std::vector<std::size_t> k_values,
                                   std::vector<double> estimates, const ScanOptions& options) {
  if (k_values.size() != estimates.size()) throw std::invalid_argument("stability scan: length mismatch");
  if (options.window < 3) throw std::invalid_argument("stability scan: window must cover at least 3 grid points");
  if (k_values.size() < 3) throw std::invalid_argument("stability scan: grid has fewer than 3 points");
  if (!std::is_sorted(k_values.begin(), k_values.end()) ||
      std::adjacent_find(k_values.begin(), k_values.end()) != k_values.end()) {
    throw std::invalid_argument("stability scan: k grid must be strictly increasing");
  }

  // Short grids (small samples) are treated as a single window.
  const std::size_t w = std::min(options.window, k_values.size());
  const std::size_t n_windows = k_values.size() - w + 1;
  std::vector<double> spread(n_windows, std::numeric_limits<double>::infinity());
  std::vector<double> sd(n_windows, std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < n_windows; ++s) {
    const auto first = estimates.begin() + static_cast<std::ptrdiff_t>(s);
    const auto last = first + static_cast<std::ptrdiff_t>(w);
    if (std::any_of(first, last, [](double v) { return !std::isfinite(v); })) continue;
    const auto [lo, hi] = std::minmax_element(first, last);
    const double mean = std::accumulate(first, last, 0.0) / static_cast<double>(w);
    double ss = 0.0;
    for (auto it = first; it != last; ++it) ss += (*it - mean) * (*it - mean);
    sd[s] = std::sqrt(ss / static_cast<double>(w));
    const double range = *hi - *lo;
    spread[s] = range == 0.0 ? 0.0 : (mean == 0.0 ? std::numeric_limits<double>::infinity() : range / std::abs(mean));
  }

  std::size_t best = n_windows;
  bool stable = false;
  std::size_t s = 0;
  while (s < n_windows && !(spread[s] <= options.max_relative_spread)) ++s;
  if (s < n_windows) {
    stable = true;
    best = s;
    const bool whole_grid = options.selection == ScanOptions::Selection::min_sd;
    if (options.selection == ScanOptions::Selection::first) s = n_windows;
    for (; s < n_windows && (whole_grid || spread[s] <= options.max_relative_spread); ++s) {
      if (spread[s] <= options.max_relative_spread && sd[s] < sd[best]) best = s;
    }
  } else {
    for (std::size_t t = 0; t < n_windows; ++t) {
      if (std::isfinite(spread[t]) && (best == n_windows || spread[t] < spread[best])) best = t;
    }
    if (best == n_windows) {
      throw EstimationError("stability scan", statistic + " is undefined over every window of the k grid");
    }
  }

  StabilityScan scan;
  scan.statistic = std::move(statistic);
  scan.window_begin = best;
  scan.window_end = best + w;
  const std::size_t mid = best + (w - 1) / 2;
  scan.selected_k = k_values[mid];
  scan.selected_value = estimates[mid];
  scan.stable = stable;
  scan.k_values = std::move(k_values);
  scan.estimates = std::move(estimates);
  return scan;
}

std::vector<std::size_t> rank_grid(std::size_t n, std::size_t k_min, std::size_t k_max, std::size_t points) {
  if (n < 3) throw std::invalid_argument("rank grid: need at least 3 observations");
  k_min = std::clamp<std::size_t>(k_min, 2, n - 1);
  k_max = std::clamp<std::size_t>(k_max, k_min, n - 1);
  std::vector<std::size_t> ks;
  if (points < 2 || k_min == k_max) return {k_min};
  const double ratio = std::log(static_cast<double>(k_max) / static_cast<double>(k_min));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(k_min) * std::exp(t * ratio)));
    if (ks.empty() || k > ks.back()) ks.push_back(k);
  }
  return ks;
}

std::vector<std::size_t> default_rank_grid(std::size_t n) {
  if (n < 3) throw std::invalid_argument("rank grid: need at least 3 observations");
  const std::size_t k_max = std::max<std::size_t>(std::min<std::size_t>(n / 5, 2000), 2);
  const std::size_t step = std::max<std::size_t>(10, k_max / 200);
  std::vector<std::size_t> ks;
  for (std::size_t k = std::min<std::size_t>(20, k_max); k <= k_max && k < n; k += step) ks.push_back(k);
  if (ks.empty()) ks.push_back(std::min<std::size_t>(2, n - 1));
  return ks;
}

StabilityScan scan_gamma(std::span<const double> radii, TailEstimator estimator,
                         const std::vector<std::size_t>& k_grid, const ScanOptions& options) {
  const DescendingRadii sorted(radii);
  std::vector<double> est;
  est.reserve(k_grid.size());
  for (std::size_t k : k_grid) {
    try {
      est.push_back(sorted.gamma(estimator, k));
    } catch (const EstimationError&) {
      est.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return select_stable_window(to_string(estimator), k_grid, std::move(est), options);
}

StabilityScan scan_scaled_u(std::span<const double> radii, double alpha_hat, const std::vector<std::size_t>& k_grid,
                            const ScanOptions& options) {
  if (!(alpha_hat > 0.0)) throw std::invalid_argument("scaled U scan: alpha_hat must be positive");
  const DescendingRadii sorted(radii);
  const auto n = static_cast<double>(sorted.size());
  std::vector<double> est;
  est.reserve(k_grid.size());
  for (std::size_t k : k_grid) {
    est.push_back(sorted.threshold(k) * std::pow(static_cast<double>(k) / n, 1.0 / alpha_hat));
  }
  return select_stable_window("scaled_u", k_grid, std::move(est), options);
}

void write_scan(std::ostream& os, const StabilityScan& scan) {
  const auto old_precision = os.precision(17);
  os << "# statistic: " << scan.statistic << "\n";
  os << "# selected_k: " << scan.selected_k << "\n";
  os << "# selected_value: " << scan.selected_value << "\n";
  os << "# stable: " << (scan.stable ? "true" : "false") << "\n";
  os << "k,estimate,flag\n";
  for (std::size_t i = 0; i < scan.k_values.size(); ++i) {
    const char* flag = "-";
    if (scan.k_values[i] == scan.selected_k) {
      flag = scan.stable ? "selected" : "selected_unstable";
    } else if (i >= scan.window_begin && i < scan.window_end) {
      flag = "window";
    }
    os << scan.k_values[i] << ',' << scan.estimates[i] << ',' << flag << '\n';
  }
  os.precision(old_precision);
}

double max_pairwise_difference(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

EqualityReport test_equal_tail_indices(const std::vector<std::vector<double>>& samples,
                                       const std::vector<std::size_t>& ks, const EqualityOptions& options) {
  if (samples.size() < 2) throw std::invalid_argument("equality test: need at least two samples");
  if (ks.size() != samples.size()) throw std::invalid_argument("equality test: one k per sample required");
  if (!(options.level > 0.0 && options.level < 1.0)) throw std::invalid_argument("equality test: level in (0,1)");

  EqualityReport report;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    report.estimates.push_back(moment_estimator(samples[j], ks[j]));
  }
  report.max_difference = max_pairwise_difference(report.estimates);

  Rng rng(options.seed);
  std::vector<double> null_stats;
  null_stats.reserve(options.bootstrap_reps);
  std::vector<double> resample;
  std::vector<double> centered(samples.size());
  for (std::size_t b = 0; b < options.bootstrap_reps; ++b) {
    bool ok = true;
    for (std::size_t j = 0; j < samples.size() && ok; ++j) {
      const auto& x = samples[j];
      resample.resize(x.size());
      for (double& v : resample) v = x[rng.index(x.size())];
      try {
        centered[j] = moment_estimator(resample, ks[j]) - report.estimates[j];
      } catch (const EstimationError&) {
        ok = false;
      }
    }
    if (ok) null_stats.push_back(max_pairwise_difference(centered));
  }
  if (null_stats.empty()) {
    throw EstimationError("equality test", "every bootstrap replicate was degenerate");
  }
  std::sort(null_stats.begin(), null_stats.end());
  const auto idx = static_cast<std::size_t>(
      std::ceil(options.level * static_cast<double>(null_stats.size()))) - 1;
  report.null_bound = null_stats[std::min(idx, null_stats.size() - 1)];
  report.reject = report.max_difference > report.null_bound;
  return report;
}

}  // namespace riskregion
