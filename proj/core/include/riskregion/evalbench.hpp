#ifndef RISKREGION_EVALBENCH_HPP
#define RISKREGION_EVALBENCH_HPP

// Accuracy of an estimated region against the true one, the two comparator
// estimators (parametric shape, inflated minimum-volume ellipsoid) and the
// replication harness that produces the median relative errors per
// (model, method, p).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskregion/region.hpp"
#include "riskregion/sphere.hpp"
#include "riskregion/testbed.hpp"
#include "riskregion/types.hpp"

namespace riskregion {

/// P(A symmetric-difference B) under the model density: for each grid node,
/// the radial mass between the two boundary radii, integrated over the sphere.
double symm_diff_prob(const Model& m, const StarRegion& a, const StarRegion& b, const SphereGrid& grid);

/// P(estimated symmetric-difference true region) / p.
double relative_error(const TrueRegionOracle& truth, const StarRegion& estimated, const SphereGrid& grid);

/// Spectral density (2 + sin(2(theta - rho))) / (4 pi) of the parametric comparator.
double parametric_psi(double theta, double rho);

/// Parametric comparator. Only nu(S)^{1/alpha} S is parametric: the base set
/// and nu(S) come from psi_rho with the maximum likelihood (Hill) alpha, while
/// the extrapolation U_hat(n/k_U) (k_U/(n p))^{1/alpha_size} is shared with
/// the EVT estimator.
struct ParametricFit {
  /// Hill estimate from the k largest observations.
  double alpha_hat = 0.0;
  double rho_hat = 0.0;
  /// Tail index in the extrapolation factor; alpha_hat unless supplied.
  double alpha_size = 0.0;
  double u_hat = 0.0;
  double nu_s = 0.0;
  std::size_t k = 0;
  std::size_t k_u = 0;
  std::size_t n = 0;

  /// U_hat (k_U / (n p))^{1/alpha_size} nu(S)^{1/alpha_hat}.
  double scale(double p) const;
  StarRegion region(double p) const;
};

/// Maximizes sum_i log(2 + sin(2(theta_i - rho))) over rho in [0, pi) by a
/// grid search followed by Brent refinement.
double fit_rho(const std::vector<double>& angles);

/// Hill estimate of alpha and maximum likelihood rho from the k observations
/// with R_i > R_{n-k:n}; U is estimated with rank k_u. d = 2 only.
ParametricFit fit_parametric(const Sample& sample, std::size_t k, std::size_t k_u,
                             std::optional<double> alpha_size = std::nullopt);
StarRegion parametric_region(const Sample& sample, double p, std::size_t k, std::size_t k_u,
                             std::optional<double> alpha_size = std::nullopt);

/// {x : (x - center)^T shape^{-1} (x - center) <= t}.
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double t = 1.0;

  double mahalanobis2(std::span<const double> x) const;
  /// Distance from the origin, along w, to the ellipsoid surface. The origin
  /// must be inside.
  double exit_radius(const UnitDirection& w) const;
};

struct MveOptions {
  std::size_t subsets = 10000;
  std::uint64_t seed = 1;
};

/// Approximate minimum-volume ellipsoid covering ceil(n/2) points, from random
/// (d+1)-point subsets. Throws EstimationError when all subsets are singular.
Ellipsoid mve_fit(const Sample& sample, const MveOptions& options = {});

/// Complement of the MVE inflated so that the observation with the largest
/// Mahalanobis distance lies on its boundary.
StarRegion mve_region(const Sample& sample, const MveOptions& options = {});

enum class Method { evt, parametric, mve };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct BenchConfig {
  std::vector<ModelKind> models;
  std::vector<Method> methods = {Method::evt, Method::parametric, Method::mve};
  std::vector<double> ps = {1.0 / 5000.0, 1.0 / 10000.0};
  std::size_t replications = 50;
  std::size_t n = 5000;
  std::uint64_t seed = 20240601;
  /// EVT parameter selection, also the source of the parametric comparator's
  /// ranks and extrapolation factor; h defaults per dimension.
  AutoOptions evt;
  std::size_t mve_subsets = 10000;
  /// Angular resolution for region evaluation (0: SphereGrid::standard).
  int grid_resolution = 0;
  /// Worker threads (0: hardware concurrency).
  unsigned threads = 0;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  /// NaN when the replication failed.
  double relative_error = 0.0;
  std::string failure;
  std::size_t k_alpha = 0;
  std::size_t k_u = 0;
  std::size_t k_psi = 0;
  double h = 0.0;
  double alpha_hat = 0.0;
};

struct EvalReport {
  std::string model;
  double p = 0.0;
  Method method = Method::evt;
  std::vector<ReplicationRecord> records;
  /// Median over successful replications; NaN when the cell is invalid.
  double median = 0.0;
  std::size_t failures = 0;
  /// At least 5% of the replications failed.
  bool invalid = false;

  std::vector<double> errors() const;
};

/// MVE cells exist only for p = 1/n and parametric cells only for d = 2.
bool method_applies(Method method, const Model& m, double p, std::size_t n);

/// Median of the values; NaN for an empty list.
double median(std::vector<double> values);

/// One sample per (model, replication), shared by every method and p. Results
/// do not depend on the number of threads.
std::vector<EvalReport> run_benchmark(const BenchConfig& config);

/// Rows are models, columns are method x p in the order EVT, Par, NP per p;
/// undefined cells are written as "-".
void write_table(std::ostream& os, const std::vector<EvalReport>& reports, const BenchConfig& config);

/// One row per (model, method, p, replication).
void write_long(std::ostream& os, const std::vector<EvalReport>& reports);

}  // namespace riskregion

#endif  // RISKREGION_EVALBENCH_HPP
