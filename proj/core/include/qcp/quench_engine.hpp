#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qcp/cd_coefficients.hpp"
#include "qcp/ising_momentum.hpp"

namespace qcp {

/// Linear ramp g(t) = g_c - rate * t from g_initial to g_final, g_c = 1.
class QuenchProtocol {
 public:
  QuenchProtocol(double g_initial, double g_final, double rate);

  double g_initial() const { return g_i_; }
  double g_final() const { return g_f_; }
  double rate() const { return rate_; }
  double t_start() const { return (kCriticalField - g_i_) / rate_; }
  double t_end() const { return (kCriticalField - g_f_) / rate_; }
  // Returns g_initial / g_final exactly at t_start / t_end.
  double field_at(double t) const;
  // False unless g_initial > g_c > g_final (paramagnet to ferromagnet).
  bool crosses_critical_point() const { return g_i_ > kCriticalField && kCriticalField > g_f_; }

 private:
  double g_i_;
  double g_f_;
  double rate_;
};

enum class Composition { h0_only, h1_only, h0_plus_h1 };

std::string_view to_string(Composition c);
Composition parse_composition(std::string_view s);

struct DriverConfig {
  Composition composition = Composition::h0_plus_h1;
  CdConfig cd;

  bool includes_h0() const { return composition != Composition::h1_only; }
  bool includes_h1() const { return composition != Composition::h0_only; }
};

struct SpectrumResult {
  std::vector<double> k_grid;
  std::vector<double> p_k;
  double n_ex = 0.0;
  QuenchProtocol protocol{10.0, 0.0, 1.0};
  DriverConfig driver;
  int n_sites = 0;
  double tol = 0.0;
};

struct ModeSample {
  double time;
  double field;
  ModeState state;
};

/// Integrates the BdG equation of one momentum mode from the ground state of
/// the bare mode block at g_initial to t_end. The CD part of the mode block is
/// 4 * rate * F_M(k, g(t)) sy.
ModeState evolve_mode(double k, const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites, double tol);

/// Same propagation recording the state at `samples` + 1 equally spaced times.
std::vector<ModeSample> track_mode(double k, const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites,
                                   double tol, int samples);

/// Population of the upper eigenvector of the bare mode block at g_final.
double excitation_probability(const ModeState& final_state, double k, double g_final);

/// Runs every mode of the grid on `workers` threads (0 = hardware
/// concurrency). p_k does not depend on the worker count.
SpectrumResult run_spectrum(const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites, double tol,
                            int workers = 0);

/// (2/N) sum_{k>0} p_k with compensated summation in ascending k; the
/// discrete form of (1/pi) int_0^pi p_k dk.
double excitation_density(std::span<const double> p_k);
double excitation_density(const SpectrumResult& spectrum);

struct SweepRow {
  double rate;
  int cutoff;
  Filter filter;
  double n_ex;
  std::optional<std::string> error;
};

/// n_ex over the product rates x cutoffs, rate-major. Errors in a cell are
/// recorded on the row and the sweep continues.
std::vector<SweepRow> sweep(const QuenchProtocol& base, std::span<const double> rates, std::span<const int> cutoffs,
                            Filter filter, CoeffMode coeff_mode, int n_sites, double tol, int workers = 0);

/// sum_{k>0} (1/4) (dtheta_k/dg)^2 with dtheta_k/dg = -sin k / (g^2 + 1 - 2 g cos k).
double fidelity_susceptibility(double g, int n_sites);

/// <0| H1^2 |0> of the exact counterdiabatic term at ramp rate `rate`, summed
/// over modes from explicit 2x2 matrix elements in the mode ground states.
double cd_variance(double g, double rate, int n_sites);

/// Applies `fn(i)` for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace qcp
