#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcp/errors.hpp"
#include "qcp/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kEngineError = 3, kOracleFailure = 4 };

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw qcp::ConfigError("not an integer: '" + item + "'");
    out.push_back(value);
  }
  return out;
}

struct Flags {
  std::string config;
  int n_sites = 0;
  bool paper_scale = false;
  double rate = 0.0;
  std::vector<double> rates;
  std::vector<int> cutoffs;
  int cutoff = 0;
  std::string filter;
  std::string coeff_mode;
  std::string composition;
  double g_initial = 0.0;
  double g_final = 0.0;
  double tol = 0.0;
  std::string out;
  int workers = 0;
  double delta = 0.0;
  double span = 0.0;
  int samples = 0;
  std::string sizes;
  // fit-scaling
  std::string csv;
  double lo = 0.0;
  double hi = 0.0;
  std::string x_column = "rate";
  std::string y_column = "n_ex";
  std::string select_column;
  double select_value = 0.0;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qcp::ConfigError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterdiabatic quench experiments for the transverse-field Ising chain"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  auto* o_config = app.add_option("--config", f.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  auto* o_n = app.add_option("--n-sites", f.n_sites, "Chain length N (even)");
  auto* o_paper = app.add_flag("--paper-scale", f.paper_scale, "Use N=1600 instead of the desk default N=400");
  o_paper->excludes(o_n);
  auto* o_rate = app.add_option("--rate", f.rate, "Ramp rate");
  auto* o_rates = app.add_option("--rates", f.rates, "Comma-separated ramp rates")->delimiter(',');
  auto* o_cutoffs = app.add_option("--cutoffs", f.cutoffs, "Comma-separated cutoffs M")->delimiter(',');
  auto* o_cutoff = app.add_option("--cutoff", f.cutoff, "Single cutoff M");
  auto* o_filter = app.add_option("--filter", f.filter, "dirichlet | raised-cosine");
  auto* o_coeff = app.add_option("--coeff-mode", f.coeff_mode, "exact | analytic");
  auto* o_comp = app.add_option("--composition", f.composition, "h0_only | h1_only | h0_plus_h1");
  auto* o_gi = app.add_option("--gi", f.g_initial, "Initial field");
  auto* o_gf = app.add_option("--gf", f.g_final, "Final field");
  auto* o_tol = app.add_option("--tol", f.tol, "Integrator tolerance");
  auto* o_out = app.add_option("--out", f.out, "Output directory (default $" + std::string(qcp::kOutputDirEnv) + " or .)");
  auto* o_workers = app.add_option("--workers", f.workers, "Worker threads, 0 = all cores");

  auto* fig1 = app.add_subcommand("fig1", "Excitation spectra p_k for each cutoff and filter");
  auto* fig2 = app.add_subcommand("fig2", "Excitation density vs ramp rate for each cutoff");
  auto* sweep = app.add_subcommand("sweep", "Excitation density over rates x cutoffs");
  auto* lz = app.add_subcommand("lz-demo", "Two-level fidelity traces with and without the CD term");
  auto* o_delta = lz->add_option("--delta", f.delta, "Level coupling");
  auto* o_span = lz->add_option("--span", f.span, "Sweep lambda from -span to +span");
  auto* o_samples = lz->add_option("--samples", f.samples, "Sampling intervals");
  auto* fit = app.add_subcommand("fit-scaling", "Power-law fit of a CSV column");
  fit->add_option("csv", f.csv, "Input CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--lo", f.lo, "Lower end of the fit window")->required();
  fit->add_option("--hi", f.hi, "Upper end of the fit window")->required();
  fit->add_option("--x", f.x_column, "Abscissa column");
  fit->add_option("--y", f.y_column, "Ordinate column");
  fit->add_option("--select-column", f.select_column, "Keep rows where this column equals --select-value");
  fit->add_option("--select-value", f.select_value, "Value for --select-column");
  auto* oracle = app.add_subcommand("oracle-check", "Spin-basis verification of the momentum reduction");
  auto* o_sizes = oracle->add_option("--sizes", f.sizes, "Comma-separated chain lengths (empty for none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    qcp::ExperimentConfig cfg = *o_config ? qcp::ExperimentConfig::load(f.config) : qcp::ExperimentConfig{};
    if (*o_n) cfg.n_sites = f.n_sites;
    if (f.paper_scale) cfg.n_sites = qcp::kPaperSites;
    if (*o_rate) cfg.rate = f.rate;
    if (*o_rates) cfg.rates = f.rates;
    if (*o_cutoffs) cfg.cutoffs = f.cutoffs;
    if (*o_cutoff) cfg.cutoff = f.cutoff;
    if (*o_filter) cfg.filter = qcp::parse_filter(f.filter);
    if (*o_coeff) cfg.coeff_mode = qcp::parse_coeff_mode(f.coeff_mode);
    if (*o_comp) cfg.composition = qcp::parse_composition(f.composition);
    if (*o_gi) cfg.g_initial = f.g_initial;
    if (*o_gf) cfg.g_final = f.g_final;
    if (*o_tol) cfg.tol = f.tol;
    if (*o_out) cfg.output_dir = f.out;
    if (*o_workers) cfg.workers = f.workers;
    if (*o_delta) cfg.lz_delta = f.delta;
    if (*o_span) cfg.lz_span = f.span;
    if (*o_samples) cfg.lz_samples = f.samples;
    if (*o_sizes) cfg.oracle_sizes = parse_int_list(f.sizes);

    if (*fig1) {
      cfg.experiment = "fig1";
      for (const auto& p : qcp::cmd_fig1(cfg)) std::cout << p.string() << "\n";
    } else if (*fig2) {
      cfg.experiment = "fig2";
      std::cout << qcp::cmd_fig2(cfg).string() << "\n";
    } else if (*sweep) {
      cfg.experiment = "sweep";
      std::cout << qcp::cmd_sweep(cfg).string() << "\n";
    } else if (*lz) {
      cfg.experiment = "lz-demo";
      std::cout << qcp::cmd_lz_demo(cfg).string() << "\n";
    } else if (*fit) {
      qcp::FitRequest request;
      request.x_column = f.x_column;
      request.y_column = f.y_column;
      if (!f.select_column.empty()) request.select_column = f.select_column;
      request.select_value = f.select_value;
      request.lo = f.lo;
      request.hi = f.hi;
      const qcp::FitResult result = qcp::cmd_fit_scaling(f.csv, request);
      nlohmann::json doc = result.to_json();
      doc["source"] = f.csv;
      if (*o_out) {
        std::filesystem::create_directories(cfg.resolved_output_dir());
        write_json(cfg.resolved_output_dir() / "fit.json", doc);
      }
      std::cout << doc.dump(2) << "\n";
    } else if (*oracle) {
      const qcp::OracleReport report = qcp::cmd_oracle_check(cfg.oracle_sizes, 1e-12);
      const nlohmann::json doc = report.to_json();
      if (*o_out) {
        std::filesystem::create_directories(cfg.resolved_output_dir());
        write_json(cfg.resolved_output_dir() / "oracle_report.json", doc);
      }
      std::cout << doc.dump(2) << "\n";
      if (!report.passed()) {
        for (const auto& c : report.checks) {
          if (!c.passed) {
            std::fprintf(stderr, "qcp: oracle check %s failed at N=%d: deviation %.3e > %.1e\n", c.name.c_str(),
                         c.n_sites, c.deviation, c.threshold);
          }
        }
        return kOracleFailure;
      }
    }
  } catch (const qcp::ConfigError& e) {
    std::fprintf(stderr, "qcp: config error: %s\n", e.what());
    return kConfigError;
  } catch (const qcp::IntegrationError& e) {
    std::fprintf(stderr, "qcp: engine error: %s\n", e.what());
    return kEngineError;
  } catch (const qcp::DegeneracyError& e) {
    std::fprintf(stderr, "qcp: engine error: %s\n", e.what());
    return kEngineError;
  } catch (const qcp::SingularityError& e) {
    std::fprintf(stderr, "qcp: engine error: %s\n", e.what());
    return kEngineError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "qcp: invalid input: %s\n", e.what());
    return kConfigError;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "qcp: invalid input: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qcp: error: %s\n", e.what());
    return kEngineError;
  }
  return kOk;
}
