#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "riskregion/evalbench.hpp"
#include "riskregion/region.hpp"
#include "riskregion/spectral.hpp"
#include "riskregion/tailfit.hpp"
#include "riskregion/testbed.hpp"

namespace riskregion::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCommands = {"ingest", "estimate", "rank", "stability", "simulate", "bench"};

// Failures the user can fix (bad input, bad settings); reported without a
// stage name and with exit status 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::uint64_t fnv1a(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

class Manifest {
 public:
  explicit Manifest(const std::string& command) {
    lines_.push_back("# riskregion " + command + " manifest; replay with: riskregion --config <this file>");
    set("command", command);
  }
  void set(const std::string& key, const std::string& raw) { lines_.push_back(key + " = " + raw); }
  void set_string(const std::string& key, const std::string& v) { set(key, "\"" + v + "\""); }
  void set_number(const std::string& key, double v) { set(key, format_number(v)); }
  void set_list(const std::string& key, const std::vector<std::string>& items, bool quoted) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      s += (i ? ", " : "");
      s += quoted ? "\"" + items[i] + "\"" : items[i];
    }
    set(key, s + "]");
  }
  void note(const std::string& key, const std::string& v) { notes_.push_back("# " + key + ": " + v); }

  void write(const fs::path& dir) const {
    std::ofstream f(dir / "manifest.txt", std::ios::binary);
    for (const auto& l : lines_) f << l << '\n';
    for (const auto& l : notes_) f << l << '\n';
    if (!f) throw UsageError("cannot write " + (dir / "manifest.txt").string());
  }

 private:
  std::vector<std::string> lines_;
  std::vector<std::string> notes_;
};

fs::path prepare_out(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + out + "'");
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  return f;
}

SphereGrid make_grid(int d, int resolution) {
  if (resolution == 0) return SphereGrid::standard(d);
  if (resolution < 16) throw UsageError("--grid must be 0 (standard) or at least 16");
  return SphereGrid::make(d, resolution);
}

std::optional<std::size_t> parse_rank(const std::string& flag, const std::string& v) {
  if (v.empty() || v == "auto") return std::nullopt;
  std::size_t pos = 0;
  long long k = 0;
  try {
    k = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || k < 1) throw UsageError("--" + flag + " expects a positive integer or 'auto', got '" + v + "'");
  return static_cast<std::size_t>(k);
}

std::vector<std::string> number_items(const std::vector<double>& v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(format_number(x));
  return out;
}

struct FitSettings {
  std::string input;
  std::string k;
  std::string k_alpha;
  std::string k_u;
  std::string k_psi;
  double h = 0.0;
  std::string estimator = "moment";
  std::string kernel = "linear";
  int grid = 0;
};

void add_fit_options(CLI::App* cmd, FitSettings& s, bool with_ranks) {
  cmd->add_option("--input", s.input, "Delimited table, one observation per row (d = 2 or 3)")->required();
  if (with_ranks) {
    cmd->add_option("--k", s.k, "Shared default for the three ranks: an integer or 'auto'");
    cmd->add_option("--k-alpha", s.k_alpha, "Rank for the tail index, or 'auto'");
    cmd->add_option("--k-u", s.k_u, "Rank for U(n/k), or 'auto'");
    cmd->add_option("--k-psi", s.k_psi, "Rank for the spectral density, or 'auto'");
  }
  cmd->add_option("--h", s.h, "Kernel bandwidth in (0,1); 0 picks 0.4 (d=2) or 0.5 (d=3)");
  cmd->add_option("--estimator", s.estimator, "Tail index estimator")->check(CLI::IsMember({"moment", "hill"}));
  cmd->add_option("--kernel", s.kernel, "Spectral kernel")->check(CLI::IsMember({"linear", "quadratic"}));
  cmd->add_option("--grid", s.grid, "Angular resolution (0: 720 nodes for d=2, 48x96 for d=3)");
}

struct LoadedSample {
  Sample sample;
  std::string hash;
};

LoadedSample load_sample(const std::string& path) {
  NumericTable t;
  try {
    t = read_table_file(path);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  if (t.columns() != 2 && t.columns() != 3) {
    throw UsageError(path + ": expected 2 or 3 columns, found " + std::to_string(t.columns()));
  }
  if (t.rows.size() < 20) throw UsageError(path + ": too few observations (" + std::to_string(t.rows.size()) + ")");
  return {sample_from_table(t), hex(fnv1a(path))};
}

AutoOptions auto_options(const FitSettings& s, int d) {
  AutoOptions o;
  o.estimator = tail_estimator_from_string(s.estimator);
  o.kernel = Kernel::from_name(s.kernel);
  if (s.h != 0.0) {
    if (!(s.h > 0.0 && s.h < 1.0)) throw UsageError("--h must lie in (0, 1)");
    o.h = s.h;
  } else {
    o.h = default_bandwidth(d);
  }
  const auto shared = parse_rank("k", s.k);
  o.k_alpha = s.k_alpha.empty() ? shared : parse_rank("k-alpha", s.k_alpha);
  o.k_u = s.k_u.empty() ? shared : parse_rank("k-u", s.k_u);
  o.k_psi = s.k_psi.empty() ? shared : parse_rank("k-psi", s.k_psi);
  return o;
}

void record_fit(Manifest& m, const FitSettings& s, const FitParams& params, const std::string& input_hash) {
  m.set_string("input", s.input);
  m.set("k-alpha", std::to_string(params.k_alpha));
  m.set("k-u", std::to_string(params.k_u));
  m.set("k-psi", std::to_string(params.k_psi));
  m.set_number("h", params.h);
  m.set_string("estimator", to_string(params.estimator));
  m.set_string("kernel", params.kernel.name());
  m.set("grid", std::to_string(s.grid));
  m.note("input_fnv1a64", input_hash);
}

void note_scan(Manifest& m, const std::string& key, const std::optional<StabilityScan>& scan, std::ostream& err) {
  if (!scan) {
    m.note(key, "fixed");
    return;
  }
  m.note(key, std::string("stability scan, ") + (scan->stable ? "stable" : "unstable"));
  if (!scan->stable) {
    err << "warning: no stable window in the " << scan->statistic << " scan; using the least variable window\n";
  }
}

// --- ingest -----------------------------------------------------------------

struct IngestSettings {
  std::string input;
  std::vector<std::string> columns;
};

int cmd_ingest(const IngestSettings& s, const std::string& out, std::ostream& os) {
  NumericTable prices;
  try {
    prices = read_table_file(s.input);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  NumericTable returns;
  try {
    returns = log_returns(prices, s.columns);
  } catch (const std::invalid_argument& e) {
    throw UsageError(s.input + ": " + e.what());
  }
  const fs::path dir = prepare_out(out);
  {
    auto f = open_out(dir / "returns.csv");
    f << "# log returns of " << s.input << "\n";
    for (std::size_t j = 0; j < returns.header.size(); ++j) f << (j ? "," : "") << returns.header[j];
    f << '\n';
    for (const auto& row : returns.rows) {
      for (std::size_t j = 0; j < row.size(); ++j) f << (j ? "," : "") << format_number(row[j]);
      f << '\n';
    }
  }
  Manifest m("ingest");
  m.set_string("input", s.input);
  if (!s.columns.empty()) m.set_list("columns", s.columns, true);
  m.note("input_fnv1a64", hex(fnv1a(s.input)));
  m.note("price_rows", std::to_string(prices.rows.size()));
  m.note("return_rows", std::to_string(returns.rows.size()));
  m.write(dir);
  os << "ingest: " << prices.rows.size() << " price rows -> " << returns.rows.size() << " return rows in "
     << (dir / "returns.csv").string() << "\n";
  return 0;
}

// --- estimate ---------------------------------------------------------------

struct EstimateSettings {
  FitSettings fit;
  std::vector<double> ps;
  std::string equality_check = "auto";
  /// Ranks of the five equality-check samples; empty selects each by a scan.
  std::vector<std::size_t> equality_k;
  std::size_t bootstrap = 500;
  std::uint64_t seed = 1;
};

// Positive and negative parts of each margin plus the radius.
void equality_check(const Sample& sample, const AutoOptions& options, const std::vector<std::size_t>& fixed_k,
                    std::size_t reps, std::uint64_t seed, const fs::path& dir, Manifest& m, std::ostream& os) {
  static const char* names[] = {"x1_pos", "x1_neg", "x2_pos", "x2_neg", "radius"};
  std::vector<std::vector<double>> parts(5);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto r = sample.row(i);
    for (int j = 0; j < 2; ++j) {
      if (r[j] > 0.0) parts[2 * j].push_back(r[j]);
      if (r[j] < 0.0) parts[2 * j + 1].push_back(-r[j]);
    }
  }
  parts[4] = sample.radii();
  if (!fixed_k.empty() && fixed_k.size() != parts.size()) throw UsageError("--equality-k expects 5 ranks");
  std::vector<std::size_t> ks;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].size() < 100) {
      throw EstimationError("equality check", std::string(names[i]) + " has only " +
                                                  std::to_string(parts[i].size()) + " observations");
    }
    if (!fixed_k.empty()) {
      if (fixed_k[i] < 1 || fixed_k[i] >= parts[i].size()) throw UsageError("--equality-k: rank out of range");
      ks.push_back(fixed_k[i]);
    } else {
      const auto grid = default_rank_grid(parts[i].size());
      ks.push_back(scan_gamma(parts[i], TailEstimator::moment, grid, options.alpha_scan).selected_k);
    }
  }
  EqualityOptions eo;
  eo.bootstrap_reps = reps;
  eo.seed = derive_seed(seed, {0x657175616c});
  const EqualityReport rep = test_equal_tail_indices(parts, ks, eo);

  auto f = open_out(dir / "equality.csv");
  f << "# max_difference: " << format_number(rep.max_difference) << "\n";
  f << "# null_bound: " << format_number(rep.null_bound) << "\n";
  f << "# reject: " << (rep.reject ? "true" : "false") << "\n";
  f << "sample,n,k,gamma_hat\n";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    f << names[i] << ',' << parts[i].size() << ',' << ks[i] << ',' << format_number(rep.estimates[i]) << '\n';
  }
  std::vector<std::string> k_items;
  for (std::size_t k : ks) k_items.push_back(std::to_string(k));
  m.set_list("equality-k", k_items, false);
  m.note("equality_max_difference", format_number(rep.max_difference));
  m.note("equality_null_bound", format_number(rep.null_bound));
  m.note("equality_reject", rep.reject ? "true" : "false");
  os << "tail index equality: max difference " << rep.max_difference << ", bootstrap bound " << rep.null_bound
     << (rep.reject ? " (rejected: a common tail index is doubtful)" : " (not rejected)") << "\n";
}

int cmd_estimate(const EstimateSettings& s, const std::string& out, std::ostream& os, std::ostream& err) {
  if (s.ps.empty()) throw UsageError("estimate needs at least one --p");
  for (double p : s.ps) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("--p must lie in (0, 1), got " + format_number(p));
  }
  if (s.equality_check != "auto" && s.equality_check != "true" && s.equality_check != "false") {
    throw UsageError("--equality-check expects auto, true or false");
  }
  const LoadedSample in = load_sample(s.fit.input);
  const int d = in.sample.dim();
  const AutoOptions options = auto_options(s.fit, d);
  auto grid = std::make_shared<const SphereGrid>(make_grid(d, s.fit.grid));
  const fs::path dir = prepare_out(out);

  Manifest m("estimate");
  const bool check = s.equality_check == "true" || (s.equality_check == "auto" && d == 2);
  if (check && d != 2) throw UsageError("the tail index equality check is defined for d = 2 only");
  if (check) equality_check(in.sample, options, s.equality_k, s.bootstrap, s.seed, dir, m, os);

  const AutoSelection sel = select_parameters(in.sample, options, *grid);
  const RegionFit fit = fit_region(in.sample, sel.params, grid);
  record_fit(m, s.fit, sel.params, in.hash);
  m.set_list("p", number_items(s.ps), false);
  m.set_string("equality-check", check ? "true" : "false");
  m.set("bootstrap", std::to_string(s.bootstrap));
  m.set("seed", std::to_string(s.seed));
  note_scan(m, "k_alpha_source", sel.alpha_scan, err);
  note_scan(m, "k_u_source", sel.u_scan, err);
  note_scan(m, "k_psi_source", sel.nu_scan, err);
  m.note("n", std::to_string(in.sample.size()));
  m.note("alpha_hat", format_number(fit.tail().alpha_hat));
  m.note("u_hat", format_number(fit.tail().u_hat));
  m.note("nu_s", format_number(fit.nu_s()));

  {
    auto f = open_out(dir / "psi_hat.csv");
    f << (d == 2 ? "theta,psi\n" : "polar,azimuth,psi\n");
    const auto psi = fit.spectral().psi_on(*grid);
    for (std::size_t j = 0; j < grid->size(); ++j) {
      f << format_number(grid->parameters()[j][0]);
      if (d == 3) f << ',' << format_number(grid->parameters()[j][1]);
      f << ',' << format_number(psi[j]) << '\n';
    }
  }
  os << "alpha_hat " << format_number(fit.tail().alpha_hat) << ", nu_s " << format_number(fit.nu_s())
     << ", k_alpha " << sel.params.k_alpha << ", k_u " << sel.params.k_u << ", k_psi " << sel.params.k_psi << ", h "
     << sel.params.h << "\n";
  for (std::size_t i = 0; i < s.ps.size(); ++i) {
    const std::string name = "boundary_p" + std::to_string(i + 1) + ".csv";
    const StarRegion region = fit.region(s.ps[i]);
    auto f = open_out(dir / name);
    export_boundary(f, region, *grid);
    m.note(name, "p = " + format_number(s.ps[i]) + ", scale = " + format_number(region.scale()));
    os << "p " << format_number(s.ps[i]) << ": scale " << format_number(region.scale()) << " -> "
       << (dir / name).string() << "\n";
  }
  m.write(dir);
  return 0;
}

// --- rank -------------------------------------------------------------------

struct RankSettings {
  FitSettings fit;
  std::size_t m = 10;
};

int cmd_rank(const RankSettings& s, const std::string& out, std::ostream& os, std::ostream& err) {
  const LoadedSample in = load_sample(s.fit.input);
  const int d = in.sample.dim();
  if (s.m < 1 || s.m > in.sample.size()) throw UsageError("--m must lie in [1, n]");
  auto grid = std::make_shared<const SphereGrid>(make_grid(d, s.fit.grid));
  const AutoSelection sel = select_parameters(in.sample, auto_options(s.fit, d), *grid);
  const RegionFit fit = fit_region(in.sample, sel.params, grid);
  const auto ranked = fit.rank_extremes(in.sample, s.m);
  const fs::path dir = prepare_out(out);
  {
    auto f = open_out(dir / "ranking.csv");
    f << "rank,index" << (d == 2 ? ",x,y" : ",x,y,z") << ",p_star,degenerate\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      f << i + 1 << ',' << ranked[i].index;
      for (double v : in.sample.row(ranked[i].index)) f << ',' << format_number(v);
      f << ',' << format_number(ranked[i].p_value) << ',' << (ranked[i].degenerate_ray ? 1 : 0) << '\n';
    }
  }
  Manifest m("rank");
  record_fit(m, s.fit, sel.params, in.hash);
  m.set("m", std::to_string(s.m));
  note_scan(m, "k_alpha_source", sel.alpha_scan, err);
  note_scan(m, "k_u_source", sel.u_scan, err);
  note_scan(m, "k_psi_source", sel.nu_scan, err);
  m.note("alpha_hat", format_number(fit.tail().alpha_hat));
  m.write(dir);
  for (std::size_t i = 0; i < std::min<std::size_t>(ranked.size(), 5); ++i) {
    os << "#" << i + 1 << " observation " << ranked[i].index << " p* " << format_number(ranked[i].p_value) << "\n";
  }
  return 0;
}

// --- stability --------------------------------------------------------------

int cmd_stability(const FitSettings& s, const std::string& out, std::ostream& os, std::ostream& err) {
  const LoadedSample in = load_sample(s.input);
  const int d = in.sample.dim();
  auto grid = std::make_shared<const SphereGrid>(make_grid(d, s.grid));
  const AutoSelection sel = select_parameters(in.sample, auto_options(s, d), *grid);
  const fs::path dir = prepare_out(out);
  const std::pair<const char*, const std::optional<StabilityScan>*> scans[] = {
      {"scan_alpha.csv", &sel.alpha_scan}, {"scan_u.csv", &sel.u_scan}, {"scan_nu.csv", &sel.nu_scan}};
  Manifest m("stability");
  record_fit(m, s, sel.params, in.hash);
  for (const auto& [name, scan] : scans) {
    auto f = open_out(dir / name);
    write_scan(f, **scan);
    m.note(name, "selected k " + std::to_string((*scan)->selected_k) + ", value " +
                     format_number((*scan)->selected_value) + ((*scan)->stable ? "" : ", unstable"));
    os << name << ": k " << (*scan)->selected_k << " value " << format_number((*scan)->selected_value)
       << ((*scan)->stable ? "" : " (unstable)") << "\n";
    if (!(*scan)->stable) err << "warning: no stable window in the " << (*scan)->statistic << " scan\n";
  }
  m.write(dir);
  return 0;
}

// --- simulate ---------------------------------------------------------------

struct SimulateSettings {
  std::string model;
  std::size_t n = 5000;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateSettings& s, const std::string& out, std::ostream& os) {
  const Model* mdl = nullptr;
  try {
    mdl = &model(s.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (s.n < 1) throw UsageError("--n must be positive");
  const fs::path dir = prepare_out(out);
  {
    auto f = open_out(dir / "sample.csv");
    write_sample(f, mdl->sample(s.n, s.seed),
                 {"model: " + mdl->name(), "n: " + std::to_string(s.n), "seed: " + std::to_string(s.seed)});
  }
  Manifest m("simulate");
  m.set_string("model", mdl->name());
  m.set("n", std::to_string(s.n));
  m.set("seed", std::to_string(s.seed));
  m.write(dir);
  os << "simulate: " << s.n << " draws from " << mdl->name() << " -> " << (dir / "sample.csv").string() << "\n";
  return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchSettings {
  std::vector<std::string> models = {"cauchy2", "cauchy3", "elliptical", "clover", "asymm_shifted"};
  std::vector<std::string> methods = {"evt", "parametric", "mve"};
  std::vector<double> ps = {1.0 / 5000.0, 1.0 / 10000.0};
  std::size_t replications = 50;
  std::size_t n = 5000;
  std::uint64_t seed = 20240601;
  std::size_t mve_subsets = 10000;
  std::string estimator = "moment";
  double h = 0.0;
  int grid = 0;
  unsigned threads = 0;
};

int cmd_bench(const BenchSettings& s, const std::string& out, std::ostream& os) {
  BenchConfig cfg;
  try {
    for (const auto& name : s.models) cfg.models.push_back(model_from_string(name));
    cfg.methods.clear();
    for (const auto& name : s.methods) cfg.methods.push_back(method_from_string(name));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (double p : s.ps) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("--p must lie in (0, 1), got " + format_number(p));
  }
  if (s.replications < 1) throw UsageError("--replications must be positive");
  if (s.h != 0.0 && !(s.h > 0.0 && s.h < 1.0)) throw UsageError("--h must lie in (0, 1)");
  if (s.grid != 0 && s.grid < 16) throw UsageError("--grid must be 0 (standard) or at least 16");
  cfg.ps = s.ps;
  cfg.replications = s.replications;
  cfg.n = s.n;
  cfg.seed = s.seed;
  cfg.mve_subsets = s.mve_subsets;
  cfg.evt.estimator = tail_estimator_from_string(s.estimator);
  if (s.h != 0.0) cfg.evt.h = s.h;
  cfg.grid_resolution = s.grid;
  cfg.threads = s.threads;

  const auto reports = run_benchmark(cfg);
  const fs::path dir = prepare_out(out);
  {
    auto f = open_out(dir / "table.csv");
    write_table(f, reports, cfg);
  }
  {
    auto f = open_out(dir / "replications.csv");
    write_long(f, reports);
  }
  Manifest m("bench");
  m.set_list("models", s.models, true);
  m.set_list("methods", s.methods, true);
  m.set_list("p", number_items(s.ps), false);
  m.set("replications", std::to_string(s.replications));
  m.set("n", std::to_string(s.n));
  m.set("seed", std::to_string(s.seed));
  m.set("mve-subsets", std::to_string(s.mve_subsets));
  m.set_string("estimator", s.estimator);
  m.set_number("h", s.h);
  m.set("grid", std::to_string(s.grid));
  for (const auto& r : reports) {
    if (r.invalid) m.note("invalid_cell", r.model + " " + to_string(r.method) + " p=" + format_number(r.p));
  }
  m.write(dir);
  write_table(os, reports, cfg);
  return 0;
}

}  // namespace

NumericTable log_returns(const NumericTable& prices, const std::vector<std::string>& columns) {
  const std::size_t width = prices.columns();
  std::vector<std::size_t> idx;
  if (columns.empty()) {
    for (std::size_t j = 0; j < width; ++j) idx.push_back(j);
  }
  for (const auto& c : columns) {
    const auto it = std::find(prices.header.begin(), prices.header.end(), c);
    if (it != prices.header.end()) {
      idx.push_back(static_cast<std::size_t>(it - prices.header.begin()));
      continue;
    }
    std::size_t pos = 0;
    long long j = 0;
    try {
      j = std::stoll(c, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != c.size() || j < 1 || static_cast<std::size_t>(j) > width) {
      throw std::invalid_argument("unknown column '" + c + "'");
    }
    idx.push_back(static_cast<std::size_t>(j - 1));
  }
  if (prices.rows.size() < 2) throw std::invalid_argument("need at least 2 price rows");
  for (std::size_t i = 0; i < prices.rows.size(); ++i) {
    for (std::size_t j : idx) {
      const double y = prices.rows[i][j];
      if (!(y > 0.0) || !std::isfinite(y)) {
        throw std::invalid_argument("nonpositive price " + format_number(y) + " in row " + std::to_string(i + 1) +
                                    ", column " + std::to_string(j + 1));
      }
    }
  }
  NumericTable out;
  for (std::size_t j : idx) {
    out.header.push_back(j < prices.header.size() ? prices.header[j] : "c" + std::to_string(j + 1));
  }
  out.rows.reserve(prices.rows.size() - 1);
  for (std::size_t i = 0; i + 1 < prices.rows.size(); ++i) {
    std::vector<double> row;
    for (std::size_t j : idx) row.push_back(std::log(prices.rows[i + 1][j] / prices.rows[i][j]));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file name");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::ParseError& e) {
    throw UsageError(path + ": " + e.what());
  }
  const bool has_command =
      !rest.empty() && std::find(kCommands.begin(), kCommands.end(), rest.front()) != kCommands.end();
  std::vector<std::string> out = rest;
  for (const auto& item : items) {
    if (!item.parents.empty()) throw UsageError(path + ": sections are not supported");
    const std::string key = normalize_key(item.name);
    if (key == "command") {
      const std::string cmd = item.inputs.empty() ? "" : item.inputs.front();
      if (has_command && cmd != rest.front()) {
        throw UsageError(path + ": written for '" + cmd + "', not '" + rest.front() + "'");
      }
      if (!has_command) out.insert(out.begin(), cmd);
      continue;
    }
    if (key == "config") throw UsageError(path + ": nested config files are not supported");
    if (flag_given(rest, key)) continue;
    for (const auto& v : item.inputs) {
      out.push_back("--" + key);
      out.push_back(v);
    }
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extreme risk regions of heavy-tailed multivariate samples", "riskregion"};
  app.set_help_flag("--help", "Print help and exit");
  app.require_subcommand(1);
  app.add_option("--config", "Key = value file; command-line flags take precedence");

  std::string out_dir = ".";
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Output directory");
  };

  IngestSettings ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert price columns to log returns");
  c_ingest->add_option("--input", ingest.input, "Price table")->required();
  c_ingest->add_option("--columns", ingest.columns, "Columns by header name or 1-based index");
  add_common(c_ingest);

  EstimateSettings est;
  auto* c_est = app.add_subcommand("estimate", "Estimate risk regions and export their boundaries");
  add_fit_options(c_est, est.fit, true);
  c_est->add_option("--p", est.ps, "Tail probability (repeatable)")->required();
  c_est->add_option("--equality-check", est.equality_check, "Tail index equality pre-check: auto (d=2), true, false");
  c_est->add_option("--equality-k", est.equality_k, "Ranks of the five equality-check samples (default: scans)");
  c_est->add_option("--bootstrap", est.bootstrap, "Bootstrap replications of the equality check");
  c_est->add_option("--seed", est.seed, "Seed of the equality check bootstrap");
  add_common(c_est);

  RankSettings rank;
  auto* c_rank = app.add_subcommand("rank", "Rank the most extreme observations by p-value");
  add_fit_options(c_rank, rank.fit, true);
  c_rank->add_option("--m", rank.m, "Number of observations to report");
  add_common(c_rank);

  FitSettings stab;
  auto* c_stab = app.add_subcommand("stability", "Stability scans over k for alpha, scaled U and nu(S)");
  add_fit_options(c_stab, stab, false);
  add_common(c_stab);

  SimulateSettings sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a sample from a reference model");
  c_sim->add_option("--model", sim.model, "Model name")->required();
  c_sim->add_option("--n", sim.n, "Sample size");
  c_sim->add_option("--seed", sim.seed, "Seed");
  add_common(c_sim);

  BenchSettings bench;
  auto* c_bench = app.add_subcommand("bench", "Median relative errors over simulated replications");
  c_bench->add_option("--models", bench.models, "Model names (repeatable)");
  c_bench->add_option("--methods", bench.methods, "evt, parametric, mve (repeatable)");
  c_bench->add_option("--p", bench.ps, "Tail probability (repeatable)");
  c_bench->add_option("--replications", bench.replications, "Replications per model");
  c_bench->add_option("--n", bench.n, "Sample size");
  c_bench->add_option("--seed", bench.seed, "Base seed");
  c_bench->add_option("--mve-subsets", bench.mve_subsets, "Random subsets for the MVE search");
  c_bench->add_option("--estimator", bench.estimator, "Tail index estimator")->check(CLI::IsMember({"moment", "hill"}));
  c_bench->add_option("--h", bench.h, "Kernel bandwidth; 0 picks the per-dimension default");
  c_bench->add_option("--grid", bench.grid, "Angular resolution of the error quadrature (0: standard)");
  c_bench->add_option("--threads", bench.threads, "Worker threads (0: all cores); results do not depend on it");
  add_common(c_bench);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit cleanly; every other parse error is a usage error.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest, out_dir, out);
    if (c_est->parsed()) return cmd_estimate(est, out_dir, out, err);
    if (c_rank->parsed()) return cmd_rank(rank, out_dir, out, err);
    if (c_stab->parsed()) return cmd_stability(stab, out_dir, out, err);
    if (c_sim->parsed()) return cmd_simulate(sim, out_dir, out);
    if (c_bench->parsed()) return cmd_bench(bench, out_dir, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const EstimationError& e) {
    err << "estimation failed in stage '" << e.stage() << "': " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace riskregion::cli
