#include "qcp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qcp/errors.hpp"
#include "qcp/spin_oracle.hpp"
#include "qcp/two_level.hpp"

namespace qcp {

using nlohmann::json;

namespace {

template <class T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig cfg;
  try {
    read_if(doc, "experiment", cfg.experiment);
    if (doc.contains("chain")) read_if(doc.at("chain"), "n_sites", cfg.n_sites);
    if (doc.contains("protocol")) {
      const json& p = doc.at("protocol");
      read_if(p, "g_initial", cfg.g_initial);
      read_if(p, "g_final", cfg.g_final);
      read_if(p, "rate", cfg.rate);
    }
    if (doc.contains("driver")) {
      const json& d = doc.at("driver");
      if (d.contains("composition")) cfg.composition = parse_composition(d.at("composition").get<std::string>());
      read_if(d, "cutoff", cfg.cutoff);
      if (d.contains("filter")) cfg.filter = parse_filter(d.at("filter").get<std::string>());
      if (d.contains("coeff_mode")) cfg.coeff_mode = parse_coeff_mode(d.at("coeff_mode").get<std::string>());
    }
    if (doc.contains("sweep")) {
      read_if(doc.at("sweep"), "rates", cfg.rates);
      read_if(doc.at("sweep"), "cutoffs", cfg.cutoffs);
    }
    if (doc.contains("integrator")) read_if(doc.at("integrator"), "tol", cfg.tol);
    if (doc.contains("lz")) {
      const json& l = doc.at("lz");
      read_if(l, "delta", cfg.lz_delta);
      read_if(l, "span", cfg.lz_span);
      read_if(l, "samples", cfg.lz_samples);
    }
    if (doc.contains("oracle")) read_if(doc.at("oracle"), "sizes", cfg.oracle_sizes);
    if (doc.contains("output")) cfg.output_dir = doc.at("output").get<std::string>();
    read_if(doc, "workers", cfg.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return from_json(json::parse(in, nullptr, true, true));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

json ExperimentConfig::provenance() const {
  json doc;
  doc["experiment"] = experiment;
  doc["chain"] = {{"n_sites", n_sites}};
  doc["protocol"] = {{"g_initial", g_initial}, {"g_final", g_final}, {"rate", rate}};
  doc["driver"] = {{"composition", std::string(to_string(composition))},
                   {"cutoff", cutoff},
                   {"filter", std::string(to_string(filter))},
                   {"coeff_mode", std::string(to_string(coeff_mode))}};
  doc["sweep"] = {{"rates", rates}, {"cutoffs", cutoffs}};
  doc["integrator"] = {{"tol", tol}};
  doc["lz"] = {{"delta", lz_delta}, {"span", lz_span}, {"samples", lz_samples}};
  doc["oracle"] = {{"sizes", oracle_sizes}};
  return doc;
}

void ExperimentConfig::validate() const {
  if (n_sites < 2 || n_sites % 2 != 0) throw ConfigError("n_sites must be even and >= 2");
  if (!(tol > 0.0 && tol < 1e-2)) throw ConfigError("tol must lie in (0, 1e-2)");
  QuenchProtocol(g_initial, g_final, rate);
  for (double r : rates) QuenchProtocol(g_initial, g_final, r);
  for (int m : cutoffs) CdConfig{m, filter, coeff_mode}.validate(n_sites);
  if (cutoffs.empty() && composition != Composition::h0_only) CdConfig{cutoff, filter, coeff_mode}.validate(n_sites);
  if (!(lz_delta >= 0.0)) throw ConfigError("lz delta must be non-negative");
  if (!(lz_span > 0.0)) throw ConfigError("lz span must be positive");
  if (lz_samples < 1) throw ConfigError("lz samples must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

std::filesystem::path ExperimentConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

std::vector<int> default_fig1_cutoffs() { return {4, 8, 16, 32, 64}; }

std::vector<int> default_fig2_cutoffs() { return {0, 1, 2, 4, 8, 16, 32, 64}; }

std::vector<double> default_fig2_rates() {
  std::vector<double> rates;
  for (int i = -6; i <= 9; ++i) rates.push_back(std::pow(10.0, i / 3.0));
  return rates;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::filesystem::path prepare_output(const ExperimentConfig& cfg, const std::string& name) {
  const auto dir = cfg.resolved_output_dir();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir / name;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::string& command, const json& provenance,
               const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# qcp " << command << "\n";
  out << "# config: " << provenance.dump() << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << quote_field(table.columns[i]);
  out << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote_field(row[i]);
    out << "\r\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_record(line);
    if (header) {
      table.columns = std::move(fields);
      header = false;
    } else {
      if (fields.size() != table.columns.size()) throw ConfigError("ragged CSV row in " + path.string());
      table.rows.push_back(std::move(fields));
    }
  }
  if (header) throw ConfigError("CSV " + path.string() + " has no header row");
  return table;
}

namespace {

ExperimentConfig with_lists(ExperimentConfig cfg, std::vector<double> rates, std::vector<int> cutoffs) {
  cfg.rates = std::move(rates);
  cfg.cutoffs = std::move(cutoffs);
  cfg.validate();
  return cfg;
}

}  // namespace

std::vector<Fig1Row> fig1_rows(const ExperimentConfig& cfg, Filter filter) {
  const QuenchProtocol protocol(cfg.g_initial, cfg.g_final, cfg.rate);
  const auto cutoffs = cfg.cutoffs.empty() ? default_fig1_cutoffs() : cfg.cutoffs;
  for (int m : cutoffs) CdConfig{m, filter, cfg.coeff_mode}.validate(cfg.n_sites);
  std::vector<Fig1Row> rows;
  for (int m : cutoffs) {
    DriverConfig driver{cfg.composition, CdConfig{m, filter, cfg.coeff_mode}};
    if (m == 0) driver.composition = Composition::h0_only;
    const SpectrumResult spectrum = run_spectrum(protocol, driver, cfg.n_sites, cfg.tol, cfg.workers);
    for (std::size_t i = 0; i < spectrum.k_grid.size(); ++i) {
      const double k = spectrum.k_grid[i];
      rows.push_back({k, m, filter, spectrum.p_k[i], k * m});
    }
  }
  return rows;
}

std::vector<std::filesystem::path> cmd_fig1(const ExperimentConfig& input) {
  const ExperimentConfig cfg =
      with_lists(input, input.rates, input.cutoffs.empty() ? default_fig1_cutoffs() : input.cutoffs);
  std::vector<std::filesystem::path> written;
  for (Filter filter : {Filter::dirichlet, Filter::raised_cosine}) {
    CsvTable table{{"k", "M", "filter", "p_k", "kM"}, {}};
    for (const Fig1Row& r : fig1_rows(cfg, filter)) {
      table.rows.push_back({format_real(r.k), std::to_string(r.cutoff), std::string(to_string(r.filter)),
                            format_real(r.p_k), format_real(r.scaled_k)});
    }
    auto path = prepare_output(cfg, "fig1_" + std::string(to_string(filter)) + ".csv");
    json prov = cfg.provenance();
    prov["driver"]["filter"] = std::string(to_string(filter));
    write_csv(path, "fig1", prov, table);
    written.push_back(std::move(path));
  }
  return written;
}

namespace {

CsvTable sweep_table(const ExperimentConfig& cfg, const std::vector<double>& rates, const std::vector<int>& cutoffs,
                     bool with_filter_and_error) {
  const QuenchProtocol base(cfg.g_initial, cfg.g_final, cfg.rate);
  const auto rows = sweep(base, rates, cutoffs, cfg.filter, cfg.coeff_mode, cfg.n_sites, cfg.tol, cfg.workers);
  CsvTable table;
  table.columns = with_filter_and_error ? std::vector<std::string>{"rate", "M", "filter", "n_ex", "error"}
                                        : std::vector<std::string>{"rate", "M", "n_ex"};
  for (const SweepRow& r : rows) {
    if (with_filter_and_error) {
      table.rows.push_back({format_real(r.rate), std::to_string(r.cutoff), std::string(to_string(r.filter)),
                            r.error ? "nan" : format_real(r.n_ex), r.error.value_or("")});
    } else {
      if (r.error) throw IntegrationError("sweep cell rate=" + format_real(r.rate) + " M=" + std::to_string(r.cutoff) +
                                          ": " + *r.error);
      table.rows.push_back({format_real(r.rate), std::to_string(r.cutoff), format_real(r.n_ex)});
    }
  }
  return table;
}

}  // namespace

std::filesystem::path cmd_fig2(const ExperimentConfig& input) {
  const ExperimentConfig cfg = with_lists(input, input.rates.empty() ? default_fig2_rates() : input.rates,
                                          input.cutoffs.empty() ? default_fig2_cutoffs() : input.cutoffs);
  const CsvTable table = sweep_table(cfg, cfg.rates, cfg.cutoffs, false);
  const json prov = cfg.provenance();
  auto path = prepare_output(cfg, "fig2.csv");
  write_csv(path, "fig2", prov, table);
  return path;
}

std::filesystem::path cmd_sweep(const ExperimentConfig& input) {
  const ExperimentConfig cfg = with_lists(input, input.rates.empty() ? std::vector<double>{input.rate} : input.rates,
                                          input.cutoffs.empty() ? std::vector<int>{input.cutoff} : input.cutoffs);
  const CsvTable table = sweep_table(cfg, cfg.rates, cfg.cutoffs, true);
  const json prov = cfg.provenance();
  auto path = prepare_output(cfg, "sweep.csv");
  write_csv(path, "sweep", prov, table);
  return path;
}

std::filesystem::path cmd_lz_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  const LzParams params = LzParams::ramp(cfg.lz_delta, -cfg.lz_span, cfg.lz_span, cfg.rate);
  const Mat2 h_start = lz_hamiltonian(-cfg.lz_span, cfg.lz_delta);
  const TwoLevelState initial{instantaneous_eigenbasis(h_start).ground};
  const auto bare = evolve_two_level_sampled(params, LzDriver::bare, initial, cfg.tol, cfg.lz_samples);
  // The CD term is singular at the exact crossing of decoupled levels, so
  // with delta = 0 only the bare trace is defined.
  const bool with_cd = cfg.lz_delta > 0.0;
  const auto cd = with_cd ? evolve_two_level_sampled(params, LzDriver::assisted, initial, cfg.tol, cfg.lz_samples)
                          : std::vector<LzSample>{};
  CsvTable table{{"t", "lambda", "fidelity_bare", "fidelity_cd"}, {}};
  for (std::size_t i = 0; i < bare.size(); ++i) {
    const double lambda = bare[i].lambda;
    // With delta = 0 the crossing is exact and the adiabatic branch is the
    // one continuous with the initial state.
    const Spinor target = cfg.lz_delta > 0.0 ? instantaneous_eigenbasis(lz_hamiltonian(lambda, cfg.lz_delta)).ground
                                             : initial.amplitudes;
    table.rows.push_back({format_real(bare[i].time), format_real(lambda),
                          format_real(fidelity(target, bare[i].state.amplitudes)),
                          with_cd ? format_real(fidelity(target, cd[i].state.amplitudes)) : "nan"});
  }
  auto path = prepare_output(cfg, "lz_demo.csv");
  write_csv(path, "lz-demo", cfg.provenance(), table);
  return path;
}

json FitResult::to_json() const {
  return {{"exponent", exponent},   {"prefactor", prefactor},        {"window", {window_lo, window_hi}},
          {"points", points},       {"residual_norm", residual_norm}};
}

FitResult fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi) {
  if (x.size() != y.size()) throw std::invalid_argument("fit needs equally many x and y values");
  if (!(lo <= hi)) throw std::invalid_argument("fit window is empty");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 5) {
    throw std::invalid_argument("power-law fit needs >= 5 points in window, got " + std::to_string(lx.size()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("power-law fit needs distinct x values");
  FitResult fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.prefactor = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (intercept + fit.exponent * lx[i]);
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.points = static_cast<int>(lx.size());
  return fit;
}

FitResult cmd_fit_scaling(const std::filesystem::path& csv, const FitRequest& request) {
  const CsvTable table = read_csv(csv);
  const std::size_t xi = table.column(request.x_column);
  const std::size_t yi = table.column(request.y_column);
  std::optional<std::size_t> si;
  if (request.select_column) si = table.column(*request.select_column);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : table.rows) {
    if (si && std::stod(row[*si]) != request.select_value) continue;
    xs.push_back(std::stod(row[xi]));
    ys.push_back(std::stod(row[yi]));
  }
  return fit_power_law(xs, ys, request.lo, request.hi);
}

bool OracleReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.passed; });
}

json OracleReport::to_json() const {
  json doc;
  doc["passed"] = passed();
  doc["checks"] = json::array();
  for (const auto& c : checks) {
    doc["checks"].push_back(
        {{"name", c.name}, {"n_sites", c.n_sites}, {"deviation", c.deviation}, {"threshold", c.threshold}, {"passed", c.passed}});
  }
  return doc;
}

OracleReport cmd_oracle_check(std::span<const int> sizes, double tol) {
  for (int n : sizes) {
    if (n < 2 || n % 2 != 0 || n > oracle::kEvolutionCap) {
      throw ConfigError("oracle chain length " + std::to_string(n) + " must be even and in [2, " +
                        std::to_string(oracle::kEvolutionCap) + "]");
    }
  }
  OracleReport report;
  auto add = [&](std::string name, int n, double deviation, double threshold) {
    report.checks.push_back({std::move(name), n, deviation, threshold, deviation <= threshold});
  };
  for (int n : sizes) {
    add("h0_momentum_form", n, oracle::verify_h0_momentum_form(n, 0.7), 1e-10);

    double h1_dev = 0.0;
    double parity = oracle::build_spin_h0(n, 0.7).parity_commutator_norm();
    for (int m = 1; m <= n / 2; ++m) {
      h1_dev = std::max(h1_dev, oracle::verify_h1m_momentum_form(n, m));
      parity = std::max(parity, oracle::build_spin_h1m(n, m).parity_commutator_norm());
    }
    add("h1m_momentum_form", n, h1_dev, 1e-10);
    add("parity_commutator", n, parity, 1e-12);

    double spectrum_dev = 0.0;
    for (double g : {0.5, 1.0, 2.0}) {
      const auto spin = oracle::even_parity_spectrum(n, g);
      const auto momentum = oracle::momentum_even_spectrum(n, g);
      for (std::size_t i = 0; i < spin.size(); ++i) spectrum_dev = std::max(spectrum_dev, std::abs(spin[i] - momentum[i]));
    }
    add("even_spectrum", n, spectrum_dev, 1e-10);

    double element_dev = 0.0;
    for (double g : {0.5, 2.0}) {
      const auto r = oracle::cd_matrix_element_check(n, g, 1.0);
      element_dev = std::max({element_dev, r.max_relative_deviation, r.ground_diagonal});
    }
    add("cd_matrix_elements", n, element_dev, 1e-8);

    const QuenchProtocol protocol(10.0, 0.0, 5.0);
    double dynamics_dev = 0.0;
    for (int m : {0, std::min(2, n / 2), n / 2}) {
      DriverConfig driver{m == 0 ? Composition::h0_only : Composition::h0_plus_h1, CdConfig{m}};
      const double full = oracle::evolve_full(n, protocol, driver, tol).n_ex;
      const double engine = run_spectrum(protocol, driver, n, tol, 1).n_ex;
      dynamics_dev = std::max(dynamics_dev, std::abs(full - engine));
    }
    add("full_vs_momentum_dynamics", n, dynamics_dev, 1e-8);
  }
  return report;
}

}  // namespace qcp
