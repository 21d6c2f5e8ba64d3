#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcp/cd_coefficients.hpp"
#include "qcp/quench_engine.hpp"

namespace qcp {

inline constexpr int kDeskSites = 400;
inline constexpr int kPaperSites = 1600;
inline constexpr const char* kOutputDirEnv = "QCP_OUTPUT_DIR";

/// Everything a figure run needs. Loaded from a nested JSON document,
/// then overridden by command-line flags.
struct ExperimentConfig {
  std::string experiment;
  int n_sites = kDeskSites;
  double g_initial = 10.0;
  double g_final = 0.0;
  double rate = 50.0;
  Composition composition = Composition::h0_plus_h1;
  int cutoff = 16;
  Filter filter = Filter::dirichlet;
  CoeffMode coeff_mode = CoeffMode::exact_finite_n;
  std::vector<double> rates;  // empty: command default
  std::vector<int> cutoffs;   // empty: command default
  double tol = 1e-10;
  double lz_delta = 1.0;
  double lz_span = 20.0;
  int lz_samples = 400;
  std::vector<int> oracle_sizes{4, 6, 8};
  std::filesystem::path output_dir;  // empty: $QCP_OUTPUT_DIR or "."
  int workers = 0;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Resolved parameters that determine output content; excludes the output
  // location and the worker count so files are byte-identical across both.
  nlohmann::json provenance() const;
  // Throws ConfigError on the first invalid field.
  void validate() const;
  std::filesystem::path resolved_output_dir() const;
};

std::vector<int> default_fig1_cutoffs();
std::vector<int> default_fig2_cutoffs();
/// 10^-2 .. 10^3 with three points per decade.
std::vector<double> default_fig2_rates();

/// 17 significant digits, scientific notation.
std::string format_real(double x);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

/// Comment lines carry the command name and the provenance JSON, followed by
/// an RFC-4180 header row and data rows.
void write_csv(const std::filesystem::path& path, const std::string& command, const nlohmann::json& provenance,
               const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

struct Fig1Row {
  double k;
  int cutoff;
  Filter filter;
  double p_k;
  double scaled_k;  // k * M
};

std::vector<Fig1Row> fig1_rows(const ExperimentConfig& cfg, Filter filter);
/// Writes fig1_dirichlet.csv and fig1_raised_cosine.csv.
std::vector<std::filesystem::path> cmd_fig1(const ExperimentConfig& cfg);
/// Writes fig2.csv with columns rate, M, n_ex.
std::filesystem::path cmd_fig2(const ExperimentConfig& cfg);
/// Writes sweep.csv with columns rate, M, filter, n_ex, error.
std::filesystem::path cmd_sweep(const ExperimentConfig& cfg);
/// Writes lz_demo.csv with columns t, lambda, fidelity_bare, fidelity_cd.
/// fidelity_cd is "nan" for delta = 0, where the CD term is undefined.
std::filesystem::path cmd_lz_demo(const ExperimentConfig& cfg);

struct FitResult {
  double exponent = 0.0;
  double prefactor = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual_norm = 0.0;
  int points = 0;

  nlohmann::json to_json() const;
};

/// Least-squares line through (log x, log y) for x in [lo, hi].
/// Throws std::invalid_argument on fewer than 5 points or non-positive values.
FitResult fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi);

struct FitRequest {
  std::string x_column = "rate";
  std::string y_column = "n_ex";
  // Keep only rows whose `select_column` equals `select_value` (numeric compare).
  std::optional<std::string> select_column;
  double select_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

FitResult cmd_fit_scaling(const std::filesystem::path& csv, const FitRequest& request);

struct OracleCheck {
  std::string name;
  int n_sites;
  double deviation;
  double threshold;
  bool passed;
};

struct OracleReport {
  std::vector<OracleCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Runs the spin-basis verifications for each chain length. Throws
/// ConfigError for lengths above the oracle caps.
OracleReport cmd_oracle_check(std::span<const int> sizes, double tol = 1e-12);

}  // namespace qcp
