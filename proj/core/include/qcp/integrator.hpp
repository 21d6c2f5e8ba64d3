#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>

#include "qcp/errors.hpp"
#include "qcp/pauli.hpp"

namespace qcp {

/// Error control for the explicit adaptive Runge-Kutta propagator.
///
/// The local error of every accepted step satisfies
/// |err_i| <= atol + rtol * max(|y_i|, |y_new_i|) in RMS norm over the two
/// amplitudes. `atol` defaults to `rtol`, which for normalized spinors makes
/// the tolerance effectively relative to the unit norm.
struct StepControl {
  double rtol = 1e-10;
  double atol = -1.0;  // < 0 selects atol = rtol
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 200'000'000;
  // Final-state norm drift allowed, in units of `drift_unit` (rtol when
  // negative). A zero factor disables the check.
  double norm_drift_factor = 100.0;
  double drift_unit = -1.0;

  double absolute() const { return atol < 0.0 ? rtol : atol; }
  double drift_allowance() const { return norm_drift_factor * (drift_unit < 0.0 ? rtol : drift_unit); }

  /// Control for a user tolerance `tol` on the final state. The embedded
  /// estimate is fifth order while the propagated solution is eighth order,
  /// so per-step drift is a small fraction of the local tolerance but adds up
  /// over 1e5 steps. Running the controller at tol / 100 keeps the drift of
  /// long slow ramps inside 100 * tol for about twice the steps.
  static StepControl for_tolerance(double tol) {
    StepControl c;
    c.rtol = tol * kLocalTolerance;
    c.drift_unit = tol;
    return c;
  }
  static constexpr double kLocalTolerance = 1e-2;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

}  // namespace qcp

#include "qcp/detail/dop853_tableau.hpp"

namespace qcp {

/// Integrates i d/dt psi = H(t) psi for a two-component state with the
/// Dormand-Prince 8(5,3) embedded pair and a standard step-size controller.
///
/// `Hamiltonian` is any callable `Mat2(double t)` returning a Hermitian matrix.
/// The integrator keeps its step size between calls to `advance_to`, so a
/// trajectory sampled at many intermediate times costs little more than a
/// single propagation.
template <class Hamiltonian>
class SchrodingerIntegrator {
 public:
  SchrodingerIntegrator(Hamiltonian hamiltonian, double t0, const Spinor& psi0, StepControl control)
      : hamiltonian_(std::move(hamiltonian)), control_(control), t_(t0), y_(psi0) {
    if (!(control_.rtol > 0.0) || !(control_.absolute() > 0.0)) {
      throw std::invalid_argument("integrator tolerances must be positive");
    }
    f_ = rhs(t_, y_);
  }

  /// Integrates up to exactly `t_target` (forward or backward in time).
  void advance_to(double t_target) {
    if (t_target == t_) return;
    const double direction = t_target > t_ ? 1.0 : -1.0;
    if (h_abs_ <= 0.0) h_abs_ = initial_step(direction, std::abs(t_target - t_));

    while (t_ != t_target) {
      if (stats_.accepted + stats_.rejected >= control_.max_steps) {
        std::ostringstream msg;
        msg << "step budget of " << control_.max_steps << " exhausted at t=" << t_;
        throw IntegrationError(msg.str());
      }
      const double min_step =
          10.0 * std::abs(std::nextafter(t_, direction * std::numeric_limits<double>::infinity()) - t_);
      double h_abs = std::min(h_abs_, control_.max_step);
      bool rejected_once = false;

      for (;;) {
        if (!(h_abs >= min_step)) {
          std::ostringstream msg;
          msg << "step size underflow at t=" << t_ << " (h=" << h_abs << ")";
          throw IntegrationError(msg.str());
        }
        double t_new = t_ + direction * h_abs;
        bool clamped = false;
        if (direction * (t_new - t_target) >= 0.0) {
          t_new = t_target;
          clamped = true;
        }
        const double h = t_new - t_;
        const double error = try_step(h);

        if (error < 1.0) {
          double factor = error == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(error, kErrorExponent));
          if (rejected_once) factor = std::min(1.0, factor);
          // A clamped step says nothing about the natural step size.
          h_abs_ = clamped ? std::max(h_abs_, std::abs(h) * factor) : std::abs(h) * factor;
          t_ = t_new;
          y_ = y_new_;
          f_ = f_new_;
          ++stats_.accepted;
          break;
        }
        h_abs = std::abs(h) * std::max(kMinFactor, kSafety * std::pow(error, kErrorExponent));
        rejected_once = true;
        ++stats_.rejected;
      }
    }
  }

  double time() const { return t_; }
  const Spinor& state() const { return y_; }
  double max_step() const { return control_.max_step; }
  // Takes effect from the next step; the natural step size is capped, not reset.
  void set_max_step(double max_step) { control_.max_step = max_step; }
  const IntegrationStats& stats() const { return stats_; }

 private:
  static constexpr double kSafety = 0.9;
  static constexpr double kMinFactor = 0.2;
  static constexpr double kMaxFactor = 10.0;
  static constexpr double kErrorExponent = -1.0 / 8.0;

  Spinor rhs(double t, const Spinor& y) {
    ++stats_.evaluations;
    return -kI * (hamiltonian_(t) * y);
  }

  double scaled_rms(const Spinor& v, const Spinor& scale_from) const {
    double acc = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double s = control_.absolute() + control_.rtol * std::abs(scale_from[i]);
      acc += std::norm(v[i] / s);
    }
    return std::sqrt(acc / 2.0);
  }

  double initial_step(double direction, double span) {
    const double d0 = scaled_rms(y_, y_);
    const double d1 = scaled_rms(f_, y_);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    if (!std::isfinite(h0)) h0 = 1e-6;
    h0 = std::min(h0, span);
    const Spinor y1 = y_ + direction * h0 * f_;
    const Spinor f1 = rhs(t_ + direction * h0, y1);
    const double d2 = scaled_rms(f1 - f_, y_) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    const double h = std::min({100.0 * h0, h1, span});
    return std::isfinite(h) && h > 0.0 ? h : std::min(h0, span);
  }

  // One trial step of size h (signed); fills y_new_/f_new_ and returns the
  // scaled error norm (accept when < 1).
  double try_step(double h) {
    namespace tb = detail::dop853;
    std::array<Spinor, tb::kStages + 1> k;
    k[0] = f_;
    for (int s = 1; s < tb::kStages; ++s) {
      Spinor dy = Spinor::Zero();
      for (int j = 0; j < s; ++j) {
        if (tb::kA[s][j] != 0.0) dy += tb::kA[s][j] * k[j];
      }
      k[s] = rhs(t_ + tb::kC[s] * h, y_ + h * dy);
    }
    Spinor incr = Spinor::Zero();
    for (int s = 0; s < tb::kStages; ++s) {
      if (tb::kB[s] != 0.0) incr += tb::kB[s] * k[s];
    }
    y_new_ = y_ + h * incr;
    f_new_ = rhs(t_ + h, y_new_);
    k[tb::kStages] = f_new_;

    Spinor err5 = Spinor::Zero();
    Spinor err3 = Spinor::Zero();
    for (int s = 0; s <= tb::kStages; ++s) {
      if (tb::kE5[s] != 0.0) err5 += tb::kE5[s] * k[s];
      if (tb::kE3[s] != 0.0) err3 += tb::kE3[s] * k[s];
    }
    double e5 = 0.0;
    double e3 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double s = control_.absolute() + control_.rtol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
      e5 += std::norm(err5[i] / s);
      e3 += std::norm(err3[i] / s);
    }
    if (e5 == 0.0 && e3 == 0.0) return 0.0;
    const double error = std::abs(h) * e5 / std::sqrt((e5 + 0.01 * e3) * 2.0);
    // Tolerances near the underflow threshold overflow the scaled norms.
    return std::isfinite(error) ? error : std::numeric_limits<double>::infinity();
  }

  Hamiltonian hamiltonian_;
  StepControl control_;
  double t_;
  Spinor y_;
  Spinor f_;
  Spinor y_new_;
  Spinor f_new_;
  double h_abs_ = 0.0;
  IntegrationStats stats_;
};

/// Throws IntegrationError when | |psi|^2 - 1 | exceeds the drift allowed by `control`.
inline void check_norm_drift(const Spinor& psi, const StepControl& control) {
  if (control.norm_drift_factor <= 0.0) return;
  const double drift = std::abs(psi.squaredNorm() - 1.0);
  if (drift > control.drift_allowance()) {
    std::ostringstream msg;
    msg << "norm drift " << drift << " exceeds " << control.drift_allowance();
    throw IntegrationError(msg.str());
  }
}

/// Propagates a normalized spinor from t0 to t1 under H(t).
template <class Hamiltonian>
Spinor propagate(Hamiltonian&& hamiltonian, double t0, double t1, const Spinor& psi0, const StepControl& control,
                 IntegrationStats* stats = nullptr) {
  SchrodingerIntegrator<std::decay_t<Hamiltonian>> integrator(std::forward<Hamiltonian>(hamiltonian), t0, psi0,
                                                              control);
  integrator.advance_to(t1);
  if (stats != nullptr) *stats = integrator.stats();
  check_norm_drift(integrator.state(), control);
  return integrator.state();
}

}  // namespace qcp
