#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcp/errors.hpp"
#include "qcp/experiments.hpp"

using namespace qcp;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qcp_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.n_sites = 40;
  cfg.output_dir = out;
  cfg.cutoffs = {2, 4};
  return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("real formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 2.0245253709e-02, 6.02214076e23, -1e-300}) {
    const std::string s = format_real(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_real(0.5) == "5.0000000000000000e-01");
}

TEST_CASE("CSV round trip with quoting") {
  const fs::path dir = scratch("csv");
  CsvTable t{{"a", "b,c"}, {{"1", "x\"y"}, {"2", ""}}};
  write_csv(dir / "t.csv", "test", nlohmann::json{{"k", 1}}, t);
  const std::string raw = slurp(dir / "t.csv");
  CHECK(raw.rfind("# qcp test\n# config: {\"k\":1}\n", 0) == 0);
  CHECK(raw.find("\"b,c\"") != std::string::npos);
  const CsvTable back = read_csv(dir / "t.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b,c") == 1);
  CHECK_THROWS_AS(back.column("zzz"), std::invalid_argument);
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), ConfigError);
}

TEST_CASE("config from nested JSON") {
  const auto doc = nlohmann::json::parse(R"({
    "experiment": "fig2",
    "chain": {"n_sites": 64},
    "protocol": {"g_initial": 5, "g_final": -0.5, "rate": 2},
    "driver": {"composition": "h1_only", "cutoff": 3, "filter": "raised-cosine", "coeff_mode": "analytic"},
    "sweep": {"rates": [0.1, 1], "cutoffs": [0, 8]},
    "integrator": {"tol": 1e-9},
    "workers": 2
  })");
  const auto cfg = ExperimentConfig::from_json(doc);
  CHECK(cfg.n_sites == 64);
  CHECK(cfg.g_final == -0.5);
  CHECK(cfg.composition == Composition::h1_only);
  CHECK(cfg.filter == Filter::raised_cosine);
  CHECK(cfg.coeff_mode == CoeffMode::analytic_large_n);
  CHECK(cfg.cutoffs == std::vector<int>{0, 8});
  CHECK(cfg.tol == 1e-9);
  CHECK(cfg.workers == 2);
  CHECK_NOTHROW(cfg.validate());

  const auto prov = cfg.provenance();
  CHECK_FALSE(prov.contains("workers"));
  CHECK_FALSE(prov.contains("output"));
  CHECK(prov["driver"]["filter"] == "raised_cosine");

  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"chain": {"n_sites": "many"}})")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"driver": {"filter": "box"}})")), ConfigError);

  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "none.json"), ConfigError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.n_sites = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.rates = {1.0, -1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.cutoffs = {500};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.tol = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig cfg;
  cfg.output_dir = "explicit";
  CHECK(cfg.resolved_output_dir() == fs::path("explicit"));
  cfg.output_dir.clear();
  ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
  CHECK(cfg.resolved_output_dir() == fs::path("/tmp/from_env"));
  ::unsetenv(kOutputDirEnv);
  CHECK(cfg.resolved_output_dir() == fs::path("."));
}

TEST_CASE("default sweep grids") {
  const auto rates = default_fig2_rates();
  CHECK(rates.size() == 16);
  CHECK(rates.front() == Approx(1e-2));
  CHECK(rates.back() == Approx(1e3));
  CHECK(default_fig1_cutoffs() == std::vector<int>{4, 8, 16, 32, 64});
  CHECK(default_fig2_cutoffs() == std::vector<int>{0, 1, 2, 4, 8, 16, 32, 64});
}

TEST_CASE("fig1 rows and files") {
  const fs::path dir = scratch("fig1");
  const auto cfg = small(dir);
  const auto rows = fig1_rows(cfg, Filter::dirichlet);
  CHECK(rows.size() == 20 * 2);
  CHECK(rows[21].cutoff == 4);
  CHECK(rows[21].scaled_k == Approx(rows[21].k * 4));

  const auto files = cmd_fig1(cfg);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "fig1_dirichlet.csv");
  CHECK(files[1].filename() == "fig1_raised_cosine.csv");
  const auto t = read_csv(files[1]);
  CHECK(t.columns == std::vector<std::string>{"k", "M", "filter", "p_k", "kM"});
  CHECK(t.rows.size() == 40);
  CHECK(t.rows[0][2] == "raised_cosine");
}

TEST_CASE("fig2 is byte-identical across worker counts") {
  const fs::path a = scratch("fig2a");
  const fs::path b = scratch("fig2b");
  auto cfg = small(a);
  cfg.rates = {0.5, 5.0};
  cfg.cutoffs = {0, 2, 4};
  cfg.workers = 1;
  const auto pa = cmd_fig2(cfg);
  cfg.output_dir = b;
  cfg.workers = 3;
  const auto pb = cmd_fig2(cfg);
  CHECK(slurp(pa) == slurp(pb));
  const auto t = read_csv(pa);
  CHECK(t.columns == std::vector<std::string>{"rate", "M", "n_ex"});
  CHECK(t.rows.size() == 6);
}

TEST_CASE("fig2 plateaus are ordered by cutoff") {
  ExperimentConfig cfg;
  cfg.n_sites = 200;
  cfg.output_dir = scratch("fig2order");
  cfg.rates = {10.0, 50.0};
  cfg.cutoffs = {0, 8, 32, 64};
  const auto t = read_csv(cmd_fig2(cfg));
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t m = 1; m < 4; ++m) {
      CHECK(std::stod(t.rows[r * 4 + m][2]) < std::stod(t.rows[r * 4 + m - 1][2]));
    }
  }
}

TEST_CASE("sweep file records per-cell results") {
  auto cfg = small(scratch("sweep"));
  cfg.rates = {1.0};
  cfg.cutoffs = {0, 20};
  const auto t = read_csv(cmd_sweep(cfg));
  CHECK(t.columns == std::vector<std::string>{"rate", "M", "filter", "n_ex", "error"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][4].empty());
  CHECK(std::stod(t.rows[1][3]) < 1e-6);
}

TEST_CASE("lz demo traces") {
  ExperimentConfig cfg;
  cfg.output_dir = scratch("lz");
  cfg.rate = 100;
  cfg.lz_samples = 40;
  auto t = read_csv(cmd_lz_demo(cfg));
  REQUIRE(t.rows.size() == 41);
  double bare_min = 1.0;
  for (const auto& row : t.rows) {
    CHECK(std::stod(row[3]) >= 1 - 1e-6);
    bare_min = std::min(bare_min, std::stod(row[2]));
  }
  CHECK(bare_min < 0.5);

  // About 4e5 rad of phase: the default tolerance trips the drift guard.
  cfg.rate = 0.001;
  cfg.lz_samples = 10;
  CHECK_THROWS_AS(cmd_lz_demo(cfg), IntegrationError);
  cfg.tol = 1e-12;
  t = read_csv(cmd_lz_demo(cfg));
  for (const auto& row : t.rows) {
    CHECK(std::stod(row[2]) >= 1 - 1e-3);
    CHECK(std::stod(row[3]) >= 1 - 1e-6);
  }

  cfg.rate = 1;
  cfg.tol = 1e-10;
  cfg.lz_delta = 0;
  t = read_csv(cmd_lz_demo(cfg));
  CHECK(t.rows.back()[3] == "nan");
  CHECK(std::stod(t.rows.back()[2]) == Approx(1.0));
}

TEST_CASE("power-law fits") {
  std::vector<double> x, y;
  for (int i = 0; i < 9; ++i) {
    x.push_back(1e-3 * std::pow(10.0, i / 4.0));
    y.push_back(0.37 * std::sqrt(x.back()));
  }
  const FitResult fit = fit_power_law(x, y, 1e-3, 1e-1);
  CHECK(std::abs(fit.exponent - 0.5) <= 1e-12);
  CHECK(fit.prefactor == Approx(0.37).epsilon(1e-12));
  CHECK(fit.points == 9);
  CHECK(fit.residual_norm < 1e-12);
  CHECK(fit.to_json()["window"][1] == 1e-1);
  CHECK_THROWS_AS(fit_power_law(x, y, 1e-3, 5e-3), std::invalid_argument);
  y[2] = 0.0;
  CHECK_THROWS_AS(fit_power_law(x, y, 1e-3, 1e-1), std::invalid_argument);
}

TEST_CASE("fit from CSV with row selection") {
  const fs::path dir = scratch("fitcsv");
  CsvTable t{{"rate", "M", "n_ex"}, {}};
  for (int i = 0; i < 6; ++i) {
    const double r = std::pow(2.0, i);
    t.rows.push_back({format_real(r), "0", format_real(3 * std::sqrt(r))});
    t.rows.push_back({format_real(r), "8", format_real(0.01)});
  }
  write_csv(dir / "d.csv", "fig2", nlohmann::json::object(), t);
  FitRequest req;
  req.select_column = "M";
  req.select_value = 0;
  req.lo = 1;
  req.hi = 32;
  CHECK(cmd_fit_scaling(dir / "d.csv", req).exponent == Approx(0.5).epsilon(1e-12));
  req.select_value = 8;
  CHECK(std::abs(cmd_fit_scaling(dir / "d.csv", req).exponent) < 1e-12);
}

TEST_CASE("plateau exponent in the cutoff") {
  ExperimentConfig cfg;
  cfg.n_sites = 400;
  cfg.output_dir = scratch("plateau");
  cfg.rates = {50};
  cfg.cutoffs = {4, 8, 16, 32, 64};
  const fs::path csv = cmd_fig2(cfg);
  FitRequest req;
  req.x_column = "M";
  req.lo = 4;
  req.hi = 64;
  CHECK(cmd_fit_scaling(csv, req).exponent == Approx(-1.0).epsilon(0.2));
}

TEST_CASE("oracle report") {
  CHECK(cmd_oracle_check({}).checks.empty());
  CHECK(cmd_oracle_check({}).passed());
  const std::vector<int> too_big{14};
  CHECK_THROWS_AS(cmd_oracle_check(too_big), ConfigError);
  const std::vector<int> sizes{4};
  const auto report = cmd_oracle_check(sizes);
  CHECK(report.passed());
  CHECK(report.checks.size() >= 5);
  const auto doc = report.to_json();
  CHECK(doc["passed"] == true);
  CHECK(doc["checks"][0].contains("deviation"));
}

}
