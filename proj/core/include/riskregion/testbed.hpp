#ifndef RISKREGION_TESTBED_HPP
#define RISKREGION_TESTBED_HPP

// Reference heavy-tailed distributions with exact densities, seeded samplers,
// true spectral densities and tail indices, and the true risk region
// {z : f(z) <= beta} with P = p.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskregion/region.hpp"
#include "riskregion/sphere.hpp"
#include "riskregion/types.hpp"

namespace riskregion {

enum class ModelKind { cauchy2, cauchy3, elliptical, clover, asymm_shifted, indep_t3, logarithmic };

std::string to_string(ModelKind kind);
ModelKind model_from_string(const std::string& name);
/// All seven models in declaration order.
const std::vector<ModelKind>& all_models();

/// Inner-disc radius r0 of the elliptical and clover densities, chosen so the
/// density integrates to one (about 1.2481).
double elliptical_r0();
/// Inner-disc radius of the asymmetric shifted density (about 1.2331).
double asymmetric_r0();
/// Normalizing constant of the elliptical spectral density (about 0.6028).
double elliptical_psi_constant();

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  std::string name() const { return to_string(kind()); }
  virtual int dim() const = 0;
  /// Tail index alpha of the radius.
  virtual double alpha() const = 0;
  /// Tail center; the origin except for asymm_shifted.
  virtual Vec center() const { return {0.0, 0.0, 0.0}; }
  virtual bool has_spectral_density() const { return true; }

  virtual double density(std::span<const double> z) const = 0;
  double density(const Vec& z) const { return density(std::span<const double>(z.data(), static_cast<std::size_t>(dim()))); }

  /// Spectral density psi(w). Throws std::domain_error for indep_t3, whose
  /// spectral measure is discrete.
  virtual double true_spectral(const UnitDirection& w) const = 0;

  /// n i.i.d. draws; bit-identical for a fixed seed.
  Sample sample(std::size_t n, std::uint64_t seed) const;
  virtual Vec draw(Rng& rng) const = 0;
};

/// Shared immutable instance.
const Model& model(ModelKind kind);
const Model& model(const std::string& name);

/// integral_{a}^{b} f(r w) r^{d-1} dr; b may be +infinity. Heavy-tailed parts
/// are integrated in s = r^{-alpha}.
double ray_mass(const Model& m, const UnitDirection& w, double a, double b);

/// Outermost radius along w at which f(r w) = beta; f < beta beyond it.
double level_crossing(const Model& m, const UnitDirection& w, double beta);

/// Base radii given per-ray by level_crossing for a fixed beta.
class LevelSetProfile final : public RadialProfile {
 public:
  LevelSetProfile(const Model& m, double beta) : model_(&m), beta_(beta) {}
  int dim() const override { return model_->dim(); }
  double base_radius(const UnitDirection& w) const override { return level_crossing(*model_, w, beta_); }

 private:
  const Model* model_;
  double beta_;
};

struct TrueRegionOracle {
  const Model* model = nullptr;
  double p = 0.0;
  double beta = 0.0;
  /// P(region) from the same quadrature used to calibrate beta.
  double probability = 0.0;
  StarRegion region;
};

/// P({f <= beta}) by per-ray root finding and radial quadrature; in d=2 the
/// angular integral is adaptive, in d=3 it uses `grid`.
double level_set_probability(const Model& m, double beta, const SphereGrid& grid);

/// Solves P({f <= beta}) = p for beta and returns the region with scale 1 and
/// base radii cached on `grid`. Throws EstimationError on non-convergence.
TrueRegionOracle true_region(const Model& m, double p, std::shared_ptr<const SphereGrid> grid);

/// P(||X|| > t) along rays from the origin.
double radial_survival(const Model& m, double t, const SphereGrid& grid);

}  // namespace riskregion

#endif  // RISKREGION_TESTBED_HPP
