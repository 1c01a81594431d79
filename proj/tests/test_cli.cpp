#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "riskregion/region.hpp"
#include "riskregion/sphere.hpp"
#include "riskregion/table_io.hpp"
#include "riskregion/tailfit.hpp"

using namespace riskregion;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(RISKREGION_TEST_DATA) + "/fx_prices.csv";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("riskregion_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<BoundaryRow> boundary(const fs::path& p) {
  std::ifstream f(p);
  std::vector<BoundaryRow> rows;
  read_boundary(f, rows);
  return rows;
}

// Data lines of a CSV with a header row, skipping '#' comments.
std::vector<std::string> data_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> lines;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    lines.push_back(line);
  }
  return lines;
}

// Shared by the workflow tests: prices -> returns once.
const fs::path& returns_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("returns");
    const auto r = run({"ingest", "--input", kFixture, "--out", d.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return d;
  }();
  return dir;
}

std::string returns_csv() { return (returns_dir() / "returns.csv").string(); }

}  // namespace

TEST(LogReturns, SimpleRatios) {
  NumericTable t;
  t.header = {"a", "b"};
  t.rows = {{1.0, 5.0}, {std::exp(1.0), 5.0}, {1.0, 5.0}};
  const auto r = cli::log_returns(t, {});
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_NEAR(r.rows[0][0], 1.0, 1e-15);
  EXPECT_NEAR(r.rows[1][0], -1.0, 1e-15);
  EXPECT_EQ(r.rows[0][1], 0.0);
  EXPECT_EQ(r.header, t.header);
}

TEST(LogReturns, ColumnSelection) {
  NumericTable t;
  t.header = {"a", "b", "c"};
  t.rows = {{1.0, 2.0, 4.0}, {2.0, 4.0, 16.0}};
  const auto by_name = cli::log_returns(t, {"c", "a"});
  ASSERT_EQ(by_name.rows[0].size(), 2u);
  EXPECT_NEAR(by_name.rows[0][0], std::log(4.0), 1e-15);
  EXPECT_NEAR(by_name.rows[0][1], std::log(2.0), 1e-15);
  const auto by_index = cli::log_returns(t, {"2"});
  EXPECT_NEAR(by_index.rows[0][0], std::log(2.0), 1e-15);
  EXPECT_THROW(cli::log_returns(t, {"d"}), std::invalid_argument);
}

TEST(LogReturns, RejectsNonPositivePrices) {
  NumericTable t;
  t.rows = {{1.0, 2.0}, {0.0, 3.0}};
  EXPECT_THROW(cli::log_returns(t, {}), std::invalid_argument);
}

TEST(LogReturns, Fixture) {
  const auto prices = read_table_file(kFixture);
  ASSERT_EQ(prices.rows.size(), 2665u);
  const auto r = cli::log_returns(prices, {"yen_dollar", "pound_dollar"});
  EXPECT_EQ(r.rows.size(), 2664u);
  EXPECT_NEAR(r.rows[10][1], std::log(prices.rows[11][1] / prices.rows[10][1]), 1e-15);
}

TEST(Ingest, RaggedInputIsAUsageError) {
  const fs::path d = fresh_dir("ragged");
  {
    std::ofstream f(d / "prices.csv");
    f << "a,b\n1,2\n3\n";
  }
  const auto r = run({"ingest", "--input", (d / "prices.csv").string(), "--out", d.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Config, FlagsWinAndCommandComesFromTheFile) {
  const fs::path d = fresh_dir("config");
  {
    std::ofstream f(d / "run.toml");
    f << "# settings\ncommand = \"simulate\"\nmodel = \"clover\"\nn = 50\nseed = 3\n";
  }
  const auto args = cli::expand_config({"--config", (d / "run.toml").string(), "--n", "70"});
  ASSERT_FALSE(args.empty());
  EXPECT_EQ(args.front(), "simulate");
  const auto count = [&](const std::string& flag) { return std::count(args.begin(), args.end(), flag); };
  EXPECT_EQ(count("--n"), 1);
  EXPECT_EQ(count("--model"), 1);
  const auto n_at = std::find(args.begin(), args.end(), "--n");
  EXPECT_EQ(*(n_at + 1), "70");

  const auto r = run({"--config", (d / "run.toml").string(), "--n", "70", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_table_file((d / "sample.csv").string()).rows.size(), 70u);
}

TEST(Config, MismatchedCommandIsRejected) {
  const fs::path d = fresh_dir("config_mismatch");
  {
    std::ofstream f(d / "run.toml");
    f << "command = \"simulate\"\nmodel = \"clover\"\n";
  }
  EXPECT_EQ(run({"rank", "--config", (d / "run.toml").string()}).code, 1);
}

TEST(Cli, UnknownCommandAndMissingFlags) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"estimate", "--input", kFixture}).code, 1);
  EXPECT_EQ(run({"simulate", "--model", "gaussian"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Simulate, DeterministicSample) {
  const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
  ASSERT_EQ(run({"simulate", "--model", "cauchy3", "--n", "300", "--seed", "9", "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--model", "cauchy3", "--n", "300", "--seed", "9", "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(a / "sample.csv"), slurp(b / "sample.csv"));
  EXPECT_EQ(read_table_file((a / "sample.csv").string()).columns(), 3u);
}

TEST(Workflow, EstimateGivesNestedBoundaries) {
  const fs::path d = fresh_dir("estimate");
  const auto r = run({"estimate", "--input", returns_csv(), "--p", "1e-3", "--p", "1e-4", "--p", "1e-5", "--out",
                      d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b1 = boundary(d / "boundary_p1.csv");
  const auto b2 = boundary(d / "boundary_p2.csv");
  const auto b3 = boundary(d / "boundary_p3.csv");
  ASSERT_EQ(b1.size(), 720u);
  ASSERT_EQ(b2.size(), b1.size());
  for (std::size_t i = 0; i < b1.size(); ++i) {
    EXPECT_LT(b1[i].radius, b2[i].radius);
    EXPECT_LT(b2[i].radius, b3[i].radius);
    EXPECT_NEAR(std::hypot(b1[i].point[0], b1[i].point[1]), b1[i].radius, 1e-12 * b1[i].radius);
  }
  // Every file is in place, the psi estimate integrates to one.
  for (const char* f : {"equality.csv", "psi_hat.csv", "manifest.txt"}) EXPECT_TRUE(fs::exists(d / f)) << f;
  const auto psi = read_table_file((d / "psi_hat.csv").string());
  double mass = 0.0;
  for (const auto& row : psi.rows) mass += row[1] * 2.0 * std::acos(-1.0) / static_cast<double>(psi.rows.size());
  EXPECT_NEAR(mass, 1.0, 1e-6);
  const auto eq = data_lines(d / "equality.csv");
  ASSERT_EQ(eq.size(), 5u);
  EXPECT_EQ(eq[0].rfind("x1_pos,", 0), 0u);
  EXPECT_EQ(eq[4].rfind("radius,2664,", 0), 0u);
  EXPECT_NE(slurp(d / "equality.csv").find("# reject: "), std::string::npos);
}

TEST(Workflow, RerunIsByteIdenticalAndManifestReplays) {
  const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b"), c = fresh_dir("rerun_c");
  const std::vector<std::string> args = {"estimate", "--input", returns_csv(), "--p", "1e-4", "--p", "1e-5"};
  auto with_out = [&](const fs::path& p) {
    auto v = args;
    v.insert(v.end(), {"--out", p.string()});
    return v;
  };
  ASSERT_EQ(run(with_out(a)).code, 0);
  ASSERT_EQ(run(with_out(b)).code, 0);
  for (const char* f : {"boundary_p1.csv", "boundary_p2.csv", "psi_hat.csv", "equality.csv", "manifest.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto replay = run({"--config", (a / "manifest.txt").string(), "--out", c.string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  for (const char* f : {"boundary_p1.csv", "boundary_p2.csv", "psi_hat.csv", "equality.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  }
}

TEST(Workflow, RankIsOrderedByPValue) {
  const fs::path d = fresh_dir("rank");
  ASSERT_EQ(run({"rank", "--input", returns_csv(), "--m", "15", "--out", d.string()}).code, 0);
  const auto t = read_table_file((d / "ranking.csv").string());
  ASSERT_EQ(t.rows.size(), 15u);
  // rank,index,x,y,p_star,degenerate
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LE(t.rows[i - 1][4], t.rows[i][4]);
  EXPECT_GT(t.rows[0][4], 0.0);
  EXPECT_EQ(t.rows[0][0], 1.0);
}

TEST(Workflow, StabilityWritesOneRowPerRank) {
  const fs::path d = fresh_dir("stability");
  const auto r = run({"stability", "--input", returns_csv(), "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::size_t expected = default_rank_grid(2664).size();
  for (const char* f : {"scan_alpha.csv", "scan_u.csv", "scan_nu.csv"}) {
    const auto t = slurp(d / f);
    EXPECT_EQ(data_lines(d / f).size(), expected) << f;
    EXPECT_NE(t.find("selected"), std::string::npos) << f;
  }
}

TEST(Workflow, FailingStageIsNamed) {
  const fs::path d = fresh_dir("light");
  {
    std::ofstream f(d / "uniform.csv");
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) f << rng.uniform(-1, 1) << ',' << rng.uniform(-1, 1) << '\n';
  }
  const auto m = run({"estimate", "--input", (d / "uniform.csv").string(), "--k", "200", "--equality-check", "false",
                      "--p", "1e-4", "--out", d.string()});
  EXPECT_EQ(m.code, 2);
  EXPECT_NE(m.err.find("estimation failed in stage 'tail index'"), std::string::npos) << m.err;
}

TEST(Bench, SmokeRunIsReproducible) {
  const fs::path a = fresh_dir("bench_a"), b = fresh_dir("bench_b");
  const std::vector<std::string> args = {"bench",          "--models", "cauchy2", "--models", "clover",
                                         "--replications", "2",        "--n",     "1000",     "--mve-subsets",
                                         "200",            "--grid",   "180",     "--p",      "1e-3",
                                         "--p",            "1e-4"};
  const auto t0 = std::chrono::steady_clock::now();
  auto va = args, vb = args;
  va.insert(va.end(), {"--out", a.string()});
  vb.insert(vb.end(), {"--out", b.string(), "--threads", "2"});
  ASSERT_EQ(run(va).code, 0);
  ASSERT_EQ(run(vb).code, 0);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
  EXPECT_EQ(slurp(a / "table.csv"), slurp(b / "table.csv"));
  EXPECT_EQ(slurp(a / "replications.csv"), slurp(b / "replications.csv"));
  const auto table = slurp(a / "table.csv");
  EXPECT_NE(table.find("cauchy2"), std::string::npos);
  EXPECT_NE(table.find("clover"), std::string::npos);
}
