#include "qcp/quench_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qcp/errors.hpp"
#include "qcp/integrator.hpp"
#include "qcp/two_level.hpp"

namespace qcp {

QuenchProtocol::QuenchProtocol(double g_initial, double g_final, double rate)
    : g_i_(g_initial), g_f_(g_final), rate_(rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("quench rate must be positive and finite");
  if (!std::isfinite(g_initial) || !std::isfinite(g_final)) throw ConfigError("field endpoints must be finite");
  if (!(g_initial > g_final)) throw ConfigError("a ramp g(t) = 1 - rate t needs g_initial > g_final");
}

double QuenchProtocol::field_at(double t) const {
  if (t == t_start()) return g_i_;
  if (t == t_end()) return g_f_;
  return kCriticalField - rate_ * t;
}

std::string_view to_string(Composition c) {
  switch (c) {
    case Composition::h0_only:
      return "h0_only";
    case Composition::h1_only:
      return "h1_only";
    case Composition::h0_plus_h1:
      return "h0_plus_h1";
  }
  return "?";
}

Composition parse_composition(std::string_view s) {
  if (s == "h0_only" || s == "h0-only") return Composition::h0_only;
  if (s == "h1_only" || s == "h1-only") return Composition::h1_only;
  if (s == "h0_plus_h1" || s == "h0-plus-h1") return Composition::h0_plus_h1;
  throw ConfigError("unknown driver composition '" + std::string(s) + "'");
}

namespace {

// Mode block H_k(t) = [a_k(g(t)) . sigma] + 4 rate F_M(k, g(t)) sy.
class ModeHamiltonian {
 public:
  ModeHamiltonian(double k, const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites)
      : protocol_(protocol),
        kernel_(k, driver.includes_h1() ? driver.cd : CdConfig{}, n_sites),
        sin_k_(std::sin(k)),
        half_chord_(2.0 * std::sin(0.5 * k) * std::sin(0.5 * k)),
        h0_(driver.includes_h0()) {}

  Mat2 operator()(double t) const {
    const double g = protocol_.field_at(t);
    double x = 0.0;
    double z = 0.0;
    if (h0_) {
      x = 2.0 * sin_k_;
      z = 2.0 * ((g - 1.0) + half_chord_);
    }
    const double y = kernel_.cutoff() > 0 ? 4.0 * protocol_.rate() * kernel_(g) : 0.0;
    return pauli_combination(x, y, z);
  }

 private:
  QuenchProtocol protocol_;
  TruncatedKernel kernel_;
  double sin_k_;
  double half_chord_;
  bool h0_;
};

// The finite-N coefficients pass between their |g| < 1 and |g| > 1 forms
// through g^N / (1 + g^N), a feature of width ~1/N around g = +-1 that an
// adaptive step can jump over without seeing it. Such windows are integrated
// with a capped step. The large-N coefficients only have a kink at |g| = 1,
// which becomes a breakpoint (empty window).
struct StepWindow {
  double t_lo;
  double t_hi;
  double max_step;
};

std::vector<StepWindow> step_windows(const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites) {
  std::vector<StepWindow> windows;
  if (!driver.includes_h1() || driver.cd.cutoff == 0) return windows;
  const bool exact = driver.cd.coeff_mode == CoeffMode::exact_finite_n;
  const double half = exact ? 30.0 / n_sites : 0.0;
  const double cap = exact ? 0.25 / (n_sites * protocol.rate()) : std::numeric_limits<double>::infinity();
  for (double g : {1.0, -1.0}) {
    const double t_lo = (kCriticalField - (g + half)) / protocol.rate();
    const double t_hi = (kCriticalField - (g - half)) / protocol.rate();
    if (t_hi >= protocol.t_start() && t_lo <= protocol.t_end()) windows.push_back({t_lo, t_hi, cap});
  }
  return windows;
}

template <class Integrator>
void advance_through(Integrator& integrator, double target, const std::vector<StepWindow>& windows) {
  while (integrator.time() < target) {
    double next = target;
    double cap = std::numeric_limits<double>::infinity();
    for (const StepWindow& w : windows) {
      if (integrator.time() < w.t_lo) {
        next = std::min(next, w.t_lo);
      } else if (integrator.time() < w.t_hi) {
        next = std::min(next, w.t_hi);
        cap = w.max_step;
      }
    }
    integrator.set_max_step(cap);
    integrator.advance_to(next);
  }
}

void validate_inputs(const DriverConfig& driver, int n_sites, double tol) {
  ChainSpec chain(n_sites);
  if (driver.includes_h1()) driver.cd.validate(n_sites);
  if (!(tol > 0.0)) throw ConfigError("integrator tolerance must be positive");
}

}  // namespace

ModeState evolve_mode(double k, const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites, double tol) {
  validate_inputs(driver, n_sites, tol);
  const StepControl control = StepControl::for_tolerance(tol);
  SchrodingerIntegrator integrator(ModeHamiltonian(k, protocol, driver, n_sites), protocol.t_start(),
                                   mode_ground_state(k, protocol.g_initial()).amplitudes, control);
  advance_through(integrator, protocol.t_end(), step_windows(protocol, driver, n_sites));
  check_norm_drift(integrator.state(), control);
  return ModeState{integrator.state()};
}

std::vector<ModeSample> track_mode(double k, const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites,
                                   double tol, int samples) {
  validate_inputs(driver, n_sites, tol);
  if (samples < 1) throw std::invalid_argument("need at least one sampling interval");
  const StepControl control = StepControl::for_tolerance(tol);
  SchrodingerIntegrator integrator(ModeHamiltonian(k, protocol, driver, n_sites), protocol.t_start(),
                                   mode_ground_state(k, protocol.g_initial()).amplitudes, control);
  std::vector<ModeSample> out;
  const auto windows = step_windows(protocol, driver, n_sites);
  out.reserve(static_cast<std::size_t>(samples) + 1);
  out.push_back({protocol.t_start(), protocol.g_initial(), ModeState{integrator.state()}});
  const double span = protocol.t_end() - protocol.t_start();
  for (int i = 1; i <= samples; ++i) {
    const double t = i == samples ? protocol.t_end() : protocol.t_start() + span * i / samples;
    advance_through(integrator, t, windows);
    out.push_back({t, protocol.field_at(t), ModeState{integrator.state()}});
  }
  check_norm_drift(integrator.state(), control);
  return out;
}

double excitation_probability(const ModeState& final_state, double k, double g_final) {
  return fidelity(mode_excited_state(k, g_final).amplitudes, final_state.amplitudes);
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

SpectrumResult run_spectrum(const QuenchProtocol& protocol, const DriverConfig& driver, int n_sites, double tol,
                            int workers) {
  validate_inputs(driver, n_sites, tol);
  SpectrumResult result{momentum_grid(n_sites), {}, 0.0, protocol, driver, n_sites, tol};
  result.p_k.assign(result.k_grid.size(), 0.0);
  parallel_for(result.k_grid.size(), workers, [&](std::size_t i) {
    const double k = result.k_grid[i];
    try {
      const ModeState final_state = evolve_mode(k, protocol, driver, n_sites, tol);
      result.p_k[i] = excitation_probability(final_state, k, protocol.g_final());
    } catch (const IntegrationError& e) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "mode k=" << k << ": " << e.what();
      throw IntegrationError(msg.str());
    }
  });
  result.n_ex = excitation_density(result.p_k);
  return result;
}

double excitation_density(std::span<const double> p_k) {
  double sum = 0.0;
  double comp = 0.0;
  for (double p : p_k) {
    const double t = sum + p;
    comp += std::abs(sum) >= std::abs(p) ? (sum - t) + p : (p - t) + sum;
    sum = t;
  }
  if (p_k.empty()) return 0.0;
  return (sum + comp) / static_cast<double>(p_k.size());
}

double excitation_density(const SpectrumResult& spectrum) { return excitation_density(spectrum.p_k); }

std::vector<SweepRow> sweep(const QuenchProtocol& base, std::span<const double> rates, std::span<const int> cutoffs,
                            Filter filter, CoeffMode coeff_mode, int n_sites, double tol, int workers) {
  std::vector<SweepRow> rows;
  rows.reserve(rates.size() * cutoffs.size());
  for (double rate : rates) {
    for (int cutoff : cutoffs) {
      SweepRow row{rate, cutoff, filter, std::nan(""), std::nullopt};
      try {
        const QuenchProtocol protocol(base.g_initial(), base.g_final(), rate);
        DriverConfig driver;
        driver.composition = cutoff == 0 ? Composition::h0_only : Composition::h0_plus_h1;
        driver.cd = CdConfig{cutoff, filter, coeff_mode};
        row.n_ex = run_spectrum(protocol, driver, n_sites, tol, workers).n_ex;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double fidelity_susceptibility(double g, int n_sites) {
  double chi = 0.0;
  for (double k : momentum_grid(n_sites)) {
    const double s = std::sin(0.5 * k);
    const double dtheta = -std::sin(k) / ((g - 1.0) * (g - 1.0) + 4.0 * g * s * s);
    chi += 0.25 * dtheta * dtheta;
  }
  return chi;
}

double cd_variance(double g, double rate, int n_sites) {
  // Mode terms commute and act on distinct pairs, so
  // <H1^2> = sum_k <H1_k^2> + sum_{k != q} <H1_k><H1_q>.
  double second = 0.0;
  double first = 0.0;
  double first_sq = 0.0;
  for (double k : momentum_grid(n_sites)) {
    const BlochVector a = bloch_vector(k, g);
    const Mat2 h1 = free_fermion_cd(a, BlochVector{0.0, 0.0, 2.0}, -rate);
    const Spinor gs = mode_ground_state(k, g).amplitudes;
    const Spinor h1_gs = h1 * gs;
    const double mean = gs.dot(h1_gs).real();
    second += h1_gs.squaredNorm();
    first += mean;
    first_sq += mean * mean;
  }
  return second + first * first - first_sq;
}

}  // namespace qcp
