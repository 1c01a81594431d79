#ifndef RISKREGION_TAILFIT_HPP
#define RISKREGION_TAILFIT_HPP

// Univariate tail estimation on the radii R_i = ||X_i||.
//
// Order statistics follow the ascending convention R_{1:n} <= ... <= R_{n:n};
// every estimator with rank k uses the top k+1 of them, R_{n-k:n} being the
// threshold.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace riskregion {

enum class TailEstimator { moment, hill };

std::string to_string(TailEstimator e);
TailEstimator tail_estimator_from_string(const std::string& s);

/// Radii sorted in descending order, shared by all rank-indexed statistics so
/// that scans over k sort once.
class DescendingRadii {
 public:
  explicit DescendingRadii(std::span<const double> radii);

  std::size_t size() const noexcept { return r_.size(); }
  /// R_{n-k:n}: the (k+1)-th largest value.
  double threshold(std::size_t k) const;
  double hill(std::size_t k) const;
  double moment(std::size_t k) const;
  double gamma(TailEstimator e, std::size_t k) const { return e == TailEstimator::hill ? hill(k) : moment(k); }

 private:
  void check_rank(std::size_t k) const;
  std::vector<double> r_;
  std::vector<double> log_r_;
};

/// (1/k) sum_{i=1}^{k} log(R_{n-i+1:n} / R_{n-k:n}).
double hill(std::span<const double> radii, std::size_t k);

/// Dekkers-Einmahl-de Haan moment estimator M1 + 1 - 1/2 (1 - M1^2/M2)^{-1}.
/// Throws EstimationError when M2 <= M1^2.
double moment_estimator(std::span<const double> radii, std::size_t k);

/// R_{n-k:n}.
double scale_u_hat(std::span<const double> radii, std::size_t k);

struct TailFit {
  double gamma_hat = 0.0;
  double alpha_hat = 0.0;
  double u_hat = 0.0;
  std::size_t k_alpha = 0;
  std::size_t k_u = 0;
  TailEstimator estimator = TailEstimator::moment;
};

/// Estimate gamma with rank k_alpha and U(n/k_u) with rank k_u. Throws
/// EstimationError("tail index", ...) if gamma_hat <= 0.
TailFit fit_tail(std::span<const double> radii, std::size_t k_alpha, std::size_t k_u,
                 TailEstimator estimator = TailEstimator::moment);

struct ScanOptions {
  /// Number of consecutive grid points per window.
  std::size_t window = 10;
  /// A window is stable when (max - min) / |mean| does not exceed this.
  double max_relative_spread = 0.10;
  /// first: the first stable window. first_run: the smallest-deviation window
  /// inside the first run of stable windows. min_sd: the smallest-deviation
  /// stable window anywhere.
  enum class Selection { first, first_run, min_sd };
  Selection selection = Selection::first_run;
};

struct StabilityScan {
  std::string statistic;
  std::vector<std::size_t> k_values;
  std::vector<double> estimates;
  std::size_t selected_k = 0;
  double selected_value = 0.0;
  /// Grid positions [window_begin, window_end) of the selected window.
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  bool stable = true;
};

/// Pick the stable region of an estimator-vs-k series. Windows whose relative
/// spread is within the threshold qualify; options.selection decides among
/// them (earliest on ties). selected_k is the window midpoint. When no window
/// qualifies, the global minimum-spread window is returned with
/// stable = false. A grid shorter than the window is one window.
StabilityScan select_stable_window(std::string statistic, std::vector<std::size_t> k_values,
                                   std::vector<double> estimates, const ScanOptions& options = {});

/// Roughly log-spaced increasing rank grid in [k_min, k_max], both clamped to (1, n).
std::vector<std::size_t> rank_grid(std::size_t n, std::size_t k_min, std::size_t k_max, std::size_t points);

/// Default scanning grid: ranks 20..n/5 in steps of 10 (at most 200 points).
std::vector<std::size_t> default_rank_grid(std::size_t n);

/// gamma_hat as a function of k. Ranks where the estimator is undefined are
/// recorded as NaN and never selected.
StabilityScan scan_gamma(std::span<const double> radii, TailEstimator estimator,
                         const std::vector<std::size_t>& k_grid, const ScanOptions& options = {});

/// U_hat(n/k) (k/n)^{1/alpha} as a function of k, with alpha held fixed.
StabilityScan scan_scaled_u(std::span<const double> radii, double alpha_hat,
                            const std::vector<std::size_t>& k_grid, const ScanOptions& options = {});

/// Delimited scan table: header "k,estimate,flag"; flag is "selected",
/// "window" or "-", and the selected row reads "selected_unstable" when no
/// window met the spread threshold.
void write_scan(std::ostream& os, const StabilityScan& scan);

double max_pairwise_difference(std::span<const double> values);

struct EqualityReport {
  std::vector<double> estimates;
  double max_difference = 0.0;
  double null_bound = 0.0;
  bool reject = false;
};

struct EqualityOptions {
  std::size_t bootstrap_reps = 500;
  double level = 0.95;
  std::uint64_t seed = 1;
};

/// Checks equality of extreme-value indices across positive samples with the
/// moment estimator. The null bound is the `level` quantile of the bootstrap
/// distribution of max_{i,j} |(g*_i - g_i) - (g*_j - g_j)|, each sample being
/// resampled with replacement.
EqualityReport test_equal_tail_indices(const std::vector<std::vector<double>>& samples,
                                       const std::vector<std::size_t>& ks, const EqualityOptions& options = {});

}  // namespace riskregion

#endif  // RISKREGION_TAILFIT_HPP
