#include "riskregion/evalbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "riskregion/table_io.hpp"

namespace riskregion {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class EllipsoidProfile final : public RadialProfile {
 public:
  explicit EllipsoidProfile(Ellipsoid e) : e_(std::move(e)) {}
  int dim() const override { return static_cast<int>(e_.center.size()); }
  double base_radius(const UnitDirection& w) const override { return e_.exit_radius(w); }

 private:
  Ellipsoid e_;
};

bool same_p(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

}  // namespace

double symm_diff_prob(const Model& m, const StarRegion& a, const StarRegion& b, const SphereGrid& grid) {
  if (a.dim() != m.dim() || b.dim() != m.dim() || grid.dim() != m.dim()) {
    throw std::invalid_argument("symm_diff_prob: dimension mismatch");
  }
  const auto ra = a.boundary_on(grid);
  const auto rb = b.boundary_on(grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double lo = std::min(ra[j], rb[j]);
    const double hi = std::max(ra[j], rb[j]);
    if (hi > lo) acc += grid.weight(j) * ray_mass(m, grid.node(j), lo, hi);
  }
  return acc;
}

double relative_error(const TrueRegionOracle& truth, const StarRegion& estimated, const SphereGrid& grid) {
  return symm_diff_prob(*truth.model, estimated, truth.region, grid) / truth.p;
}

double parametric_psi(double theta, double rho) { return (2.0 + std::sin(2.0 * (theta - rho))) / (4.0 * kPi); }

double ParametricFit::scale(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("region: p must lie in (0, 1)");
  return u_hat * std::pow(static_cast<double>(k_u) / (static_cast<double>(n) * p), 1.0 / alpha_size) *
         std::pow(nu_s, 1.0 / alpha_hat);
}

StarRegion ParametricFit::region(double p) const {
  const double rho = rho_hat;
  auto profile = std::make_shared<const DensityProfile>(
      2, alpha_hat, [rho](const UnitDirection& w) { return parametric_psi(w.angle(), rho); });
  RegionMeta meta;
  meta.kind = RegionKind::comparator;
  meta.method = "parametric";
  meta.p = p;
  meta.k_alpha = k;
  meta.k_u = k_u;
  meta.k_psi = k;
  meta.alpha_hat = alpha_hat;
  meta.nu_s = nu_s;
  meta.estimator = "hill";
  return StarRegion(scale(p), std::move(profile), std::move(meta));
}

double fit_rho(const std::vector<double>& angles) {
  if (angles.empty()) throw std::invalid_argument("fit_rho: no angles");
  const auto neg_loglik = [&angles](double rho) {
    double s = 0.0;
    for (double t : angles) s += std::log(2.0 + std::sin(2.0 * (t - rho)));
    return -s;
  };
  constexpr int kGrid = 360;
  const double step = kPi / kGrid;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double v = neg_loglik(i * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double centre = best * step;
  const auto [rho, val] = boost::math::tools::brent_find_minima(neg_loglik, centre - step, centre + step, 40);
  double out = val <= best_val ? rho : centre;
  out = std::fmod(out, kPi);
  if (out < 0.0) out += kPi;
  return out;
}

ParametricFit fit_parametric(const Sample& sample, std::size_t k, std::size_t k_u, std::optional<double> alpha_size) {
  if (sample.dim() != 2) throw std::invalid_argument("parametric estimator: defined for d = 2 only");
  const auto radii = sample.radii();
  ParametricFit fit;
  fit.n = sample.size();
  fit.k = k;
  fit.k_u = k_u;
  const double g = hill(radii, k);
  if (!(g > 0.0)) throw EstimationError("tail index", "Hill estimate is not positive");
  fit.alpha_hat = 1.0 / g;
  fit.alpha_size = alpha_size.value_or(fit.alpha_hat);
  if (!(fit.alpha_size > 0.0)) throw std::invalid_argument("parametric estimator: alpha_size must be positive");
  fit.u_hat = scale_u_hat(radii, k_u);
  const double threshold = scale_u_hat(radii, k);
  std::vector<double> angles;
  angles.reserve(k);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (radii[i] > threshold) {
      const auto x = sample.row(i);
      angles.push_back(std::atan2(x[1], x[0]));
    }
  }
  fit.rho_hat = fit_rho(angles);
  static const SphereGrid grid = SphereGrid::circle(720);
  std::vector<double> psi(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) psi[j] = parametric_psi(grid.parameters()[j][0], fit.rho_hat);
  fit.nu_s = nu_s_from_values(grid, psi, fit.alpha_hat);
  return fit;
}

StarRegion parametric_region(const Sample& sample, double p, std::size_t k, std::size_t k_u,
                             std::optional<double> alpha_size) {
  return fit_parametric(sample, k, k_u, alpha_size).region(p);
}

double Ellipsoid::mahalanobis2(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd d = v - center;
  return d.dot(shape.ldlt().solve(d));
}

double Ellipsoid::exit_radius(const UnitDirection& w) const {
  const auto d = center.size();
  Eigen::VectorXd wv(d);
  for (Eigen::Index i = 0; i < d; ++i) wv[i] = w[static_cast<int>(i)];
  const Eigen::MatrixXd a_mat = shape.inverse();
  const double a = wv.dot(a_mat * wv);
  const double b = wv.dot(a_mat * center);
  const double c = center.dot(a_mat * center) - t;
  if (c >= 0.0) throw EstimationError("comparator", "origin lies outside the inflated ellipsoid");
  return (b + std::sqrt(b * b - a * c)) / a;
}

Ellipsoid mve_fit(const Sample& sample, const MveOptions& options) {
  const int d = sample.dim();
  const std::size_t n = sample.size();
  if (n <= static_cast<std::size_t>(2 * (d + 1))) throw std::invalid_argument("mve: sample too small");
  const std::size_t half = (n + 1) / 2;
  Rng rng(options.seed);
  Eigen::MatrixXd data(d, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) data(c, static_cast<Eigen::Index>(i)) = sample.row(i)[static_cast<std::size_t>(c)];
  }

  double best_volume = std::numeric_limits<double>::infinity();
  Ellipsoid best;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d + 1));
  std::vector<double> dist(n);
  for (std::size_t s = 0; s < options.subsets; ++s) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      bool fresh = false;
      while (!fresh) {
        idx[j] = rng.index(n);
        fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(j), idx[j]) ==
                idx.begin() + static_cast<std::ptrdiff_t>(j);
      }
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t j : idx) mean += data.col(static_cast<Eigen::Index>(j));
    mean /= static_cast<double>(idx.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j : idx) {
      const Eigen::VectorXd c = data.col(static_cast<Eigen::Index>(j)) - mean;
      cov += c * c.transpose();
    }
    cov /= static_cast<double>(d);
    const double det = cov.determinant();
    if (!(det > 1e-300) || !std::isfinite(det)) continue;
    const Eigen::MatrixXd inv = cov.inverse();
    const double* flat = sample.flat().data();
    const auto du = static_cast<std::size_t>(d);
    const auto quad = [&](std::size_t i) {
      const double* x = flat + i * du;
      double acc = 0.0;
      for (int a = 0; a < d; ++a) {
        const double da = x[a] - mean[a];
        acc += inv(a, a) * da * da;
        for (int b = a + 1; b < d; ++b) acc += 2.0 * inv(a, b) * da * (x[b] - mean[b]);
      }
      return acc;
    };
    // A subset can only win if its half-coverage level stays below `bound`.
    const double bound =
        std::isfinite(best_volume) ? std::pow(best_volume * best_volume / det, 1.0 / d) : std::numeric_limits<double>::infinity();
    std::size_t covered = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = quad(i);
      if (dist[i] < bound) ++covered;
    }
    if (covered < half) continue;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(half - 1), dist.end());
    const double med = dist[half - 1];
    if (!(med > 0.0)) continue;
    // Volume of {x : (x-m)^T (med cov)^{-1} (x-m) <= 1} up to a constant.
    const double volume = std::sqrt(det * std::pow(med, d));
    if (volume < best_volume) {
      best_volume = volume;
      best.center = mean;
      best.shape = cov * med;
      best.t = 1.0;
    }
  }
  if (!std::isfinite(best_volume)) throw EstimationError("comparator", "all MVE subsets are singular");
  return best;
}

StarRegion mve_region(const Sample& sample, const MveOptions& options) {
  Ellipsoid e = mve_fit(sample, options);
  double t_max = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) t_max = std::max(t_max, e.mahalanobis2(sample.row(i)));
  e.t = t_max;
  RegionMeta meta;
  meta.kind = RegionKind::comparator;
  meta.method = "mve";
  meta.p = 1.0 / static_cast<double>(sample.size());
  return StarRegion(1.0, std::make_shared<const EllipsoidProfile>(std::move(e)), std::move(meta));
}

std::string to_string(Method m) {
  switch (m) {
    case Method::evt:
      return "evt";
    case Method::parametric:
      return "parametric";
    case Method::mve:
      return "mve";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "evt" || s == "EVT") return Method::evt;
  if (s == "parametric" || s == "par" || s == "Par") return Method::parametric;
  if (s == "mve" || s == "np" || s == "NP") return Method::mve;
  throw std::invalid_argument("unknown method '" + s + "' (expected evt, parametric or mve)");
}

std::vector<double> EvalReport::errors() const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (!std::isnan(r.relative_error)) out.push_back(r.relative_error);
  }
  return out;
}

bool method_applies(Method method, const Model& m, double p, std::size_t n) {
  switch (method) {
    case Method::evt:
      return true;
    case Method::parametric:
      return m.dim() == 2;
    case Method::mve:
      return same_p(p, 1.0 / static_cast<double>(n));
  }
  return false;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

struct Cell {
  std::size_t model = 0;
  Method method = Method::evt;
  std::size_t p_index = 0;
};

ReplicationRecord failed(ReplicationRecord r, const std::string& what) {
  r.relative_error = kNaN;
  r.failure = what;
  return r;
}

// All cells of one (model, replication) task, in cell order.
std::vector<ReplicationRecord> run_replication(const BenchConfig& cfg, const Model& m, std::size_t model_index,
                                               std::size_t rep, const std::vector<Cell>& cells,
                                               const std::vector<TrueRegionOracle>& truths,
                                               const std::shared_ptr<const SphereGrid>& grid) {
  ReplicationRecord base;
  base.replication = rep;
  base.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(m.kind()), rep});
  const Sample sample = m.sample(cfg.n, base.seed);

  std::optional<RegionFit> evt;
  std::string evt_error;
  std::optional<ParametricFit> par;
  std::string par_error;
  std::optional<StarRegion> np;
  std::string np_error;

  const auto wants = [&](Method method) {
    return std::any_of(cells.begin(), cells.end(),
                       [&](const Cell& c) { return c.model == model_index && c.method == method; });
  };
  // The parametric comparator reuses the EVT ranks and extrapolation factor.
  if (wants(Method::evt) || wants(Method::parametric)) {
    try {
      const AutoSelection sel = select_parameters(sample, cfg.evt, *grid);
      evt = fit_region(sample, sel.params, grid);
    } catch (const std::exception& e) {
      evt_error = e.what();
    }
  }
  if (wants(Method::parametric)) {
    if (evt) {
      try {
        par = fit_parametric(sample, evt->tail().k_alpha, evt->tail().k_u, evt->tail().alpha_hat);
      } catch (const std::exception& e) {
        par_error = e.what();
      }
    } else {
      par_error = evt_error;
    }
  }
  if (wants(Method::mve)) {
    try {
      np = mve_region(sample, {cfg.mve_subsets, derive_seed(base.seed, {0x6d7665})});
    } catch (const std::exception& e) {
      np_error = e.what();
    }
  }

  std::vector<ReplicationRecord> out;
  for (const Cell& c : cells) {
    if (c.model != model_index) continue;
    ReplicationRecord r = base;
    const TrueRegionOracle& truth = truths[c.p_index];
    const double p = cfg.ps[c.p_index];
    try {
      switch (c.method) {
        case Method::evt:
          if (!evt) {
            r = failed(r, evt_error);
            break;
          }
          r.k_alpha = evt->tail().k_alpha;
          r.k_u = evt->tail().k_u;
          r.k_psi = evt->params().k_psi;
          r.h = evt->params().h;
          r.alpha_hat = evt->tail().alpha_hat;
          r.relative_error = relative_error(truth, evt->region(p), *grid);
          break;
        case Method::parametric:
          if (!par) {
            r = failed(r, par_error);
            break;
          }
          r.k_alpha = par->k;
          r.k_u = par->k_u;
          r.k_psi = par->k;
          r.alpha_hat = par->alpha_hat;
          r.relative_error = relative_error(truth, par->region(p), *grid);
          break;
        case Method::mve:
          if (!np) {
            r = failed(r, np_error);
            break;
          }
          r.relative_error = relative_error(truth, *np, *grid);
          break;
      }
    } catch (const std::exception& e) {
      r = failed(r, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<EvalReport> run_benchmark(const BenchConfig& config) {
  if (config.models.empty()) throw std::invalid_argument("run_benchmark: no models");
  if (config.ps.empty()) throw std::invalid_argument("run_benchmark: no p values");
  if (config.replications == 0) throw std::invalid_argument("run_benchmark: replications must be positive");
  for (double p : config.ps) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("run_benchmark: p must lie in (0, 1)");
  }

  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
    const Model& m = model(config.models[mi]);
    for (std::size_t pi = 0; pi < config.ps.size(); ++pi) {
      for (Method method : config.methods) {
        if (method_applies(method, m, config.ps[pi], config.n)) cells.push_back({mi, method, pi});
      }
    }
  }

  std::vector<std::shared_ptr<const SphereGrid>> grids;
  std::vector<std::vector<TrueRegionOracle>> truths;
  for (ModelKind kind : config.models) {
    const Model& m = model(kind);
    auto grid = std::make_shared<const SphereGrid>(config.grid_resolution > 0
                                                       ? SphereGrid::make(m.dim(), config.grid_resolution)
                                                       : SphereGrid::standard(m.dim()));
    std::vector<TrueRegionOracle> t;
    for (double p : config.ps) t.push_back(true_region(m, p, grid));
    grids.push_back(std::move(grid));
    truths.push_back(std::move(t));
  }

  const std::size_t tasks = config.models.size() * config.replications;
  std::vector<std::vector<ReplicationRecord>> results(tasks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t mi = t / config.replications;
      const std::size_t rep = t % config.replications;
      results[t] = run_replication(config, model(config.models[mi]), mi, rep, cells, truths[mi], grids[mi]);
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<EvalReport> reports;
  for (const Cell& c : cells) {
    EvalReport rep;
    rep.model = to_string(config.models[c.model]);
    rep.p = config.ps[c.p_index];
    rep.method = c.method;
    for (std::size_t r = 0; r < config.replications; ++r) {
      const auto& task = results[c.model * config.replications + r];
      // Records within a task follow the cell order restricted to this model.
      std::size_t pos = 0;
      for (const Cell& other : cells) {
        if (other.model != c.model) continue;
        if (other.method == c.method && other.p_index == c.p_index) break;
        ++pos;
      }
      rep.records.push_back(task[pos]);
    }
    const auto errs = rep.errors();
    rep.failures = rep.records.size() - errs.size();
    rep.invalid = static_cast<double>(rep.failures) >= 0.05 * static_cast<double>(rep.records.size());
    rep.median = rep.invalid ? kNaN : median(errs);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_table(std::ostream& os, const std::vector<EvalReport>& reports, const BenchConfig& config) {
  static const std::map<Method, std::string> labels = {
      {Method::evt, "EVT"}, {Method::parametric, "Par"}, {Method::mve, "NP"}};
  std::vector<std::pair<Method, std::size_t>> columns;
  for (std::size_t pi = 0; pi < config.ps.size(); ++pi) {
    for (Method m : {Method::evt, Method::parametric, Method::mve}) {
      if (std::find(config.methods.begin(), config.methods.end(), m) == config.methods.end()) continue;
      if (m == Method::mve && !same_p(config.ps[pi], 1.0 / static_cast<double>(config.n))) continue;
      columns.emplace_back(m, pi);
    }
  }
  os << "density";
  for (const auto& [m, pi] : columns) os << ',' << labels.at(m) << " p" << (pi + 1);
  os << '\n';
  for (ModelKind kind : config.models) {
    const std::string name = to_string(kind);
    os << name;
    for (const auto& [m, pi] : columns) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) {
        return r.model == name && r.method == m && same_p(r.p, config.ps[pi]);
      });
      os << ',';
      if (it == reports.end() || it->invalid) {
        os << '-';
      } else {
        os << format_number(it->median);
      }
    }
    os << '\n';
  }
}

void write_long(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "model,method,p,replication,seed,relative_error,k_alpha,k_u,k_psi,h,alpha_hat,status\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.records) {
      os << rep.model << ',' << to_string(rep.method) << ',' << format_number(rep.p) << ',' << r.replication << ','
         << r.seed << ',' << (std::isnan(r.relative_error) ? std::string("nan") : format_number(r.relative_error))
         << ',' << r.k_alpha << ',' << r.k_u << ',' << r.k_psi << ',' << format_number(r.h) << ','
         << format_number(r.alpha_hat) << ',' << (r.failure.empty() ? std::string("ok") : "failed") << '\n';
    }
  }
}

}  // namespace riskregion
