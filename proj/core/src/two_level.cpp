#include "qcp/two_level.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcp/errors.hpp"

namespace qcp {

LzParams LzParams::ramp(double delta, double lambda_i, double lambda_f, double rate) {
  if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
  if (rate == 0.0) throw std::invalid_argument("ramp needs a nonzero rate; use LzParams::hold");
  const double duration = (lambda_f - lambda_i) / rate;
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("ramp rate must carry lambda_i towards lambda_f");
  }
  return LzParams(delta, lambda_i, lambda_f, rate, duration);
}

LzParams LzParams::hold(double delta, double lambda, double duration) {
  if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
  if (!(duration > 0.0)) throw std::invalid_argument("hold duration must be positive");
  return LzParams(delta, lambda, lambda, 0.0, duration);
}

double LzParams::lambda_at(double t) const {
  if (t == 0.0) return lambda_i_;
  if (t == duration_) return lambda_f_;
  return lambda_i_ + rate_ * t;
}

Mat2 lz_hamiltonian(double lambda, double delta) { return pauli_combination(delta, 0.0, lambda); }

Mat2 lz_cd_term(double lambda, double delta, double rate) {
  const double denom = delta * delta + lambda * lambda;
  if (denom == 0.0) throw SingularityError("counterdiabatic term undefined at lambda = delta = 0");
  return pauli_combination(0.0, -0.5 * rate * delta / denom, 0.0);
}

namespace {

// Multiplies v by the phase that makes its first nonzero component real positive.
Spinor fix_gauge(Spinor v) {
  v.normalize();
  const int lead = std::abs(v[0]) > 1e-300 ? 0 : 1;
  const double mag = std::abs(v[lead]);
  v *= std::conj(v[lead]) / mag;
  v[lead] = cplx(std::abs(v[lead]), 0.0);
  return v;
}

}  // namespace

Eigenbasis instantaneous_eigenbasis(const Mat2& h) {
  const double offset = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double hz = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const cplx lower = h(1, 0);  // hx + i hy
  const double radius = std::sqrt(hz * hz + std::norm(lower));
  const double scale = std::max({std::abs(h(0, 0)), std::abs(h(1, 1)), std::abs(lower), 1.0});
  if (2.0 * radius < 1e-14 * scale) {
    std::ostringstream msg;
    msg << "degenerate 2x2 Hamiltonian (gap " << 2.0 * radius << ")";
    throw DegeneracyError(msg.str());
  }
  // Eigenvector for eigenvalue offset + sign * radius. The two forms are
  // algebraically equivalent; the one with the larger norm avoids cancellation.
  auto eigvec = [&](double sign) {
    const double r = sign * radius;
    const Spinor a(-std::conj(lower), hz - r);
    const Spinor b(hz + r, lower);
    return fix_gauge(a.squaredNorm() >= b.squaredNorm() ? a : b);
  };
  return Eigenbasis{eigvec(-1.0), eigvec(1.0), offset - radius, offset + radius};
}

double fidelity(const Spinor& a, const Spinor& b) { return overlap_probability(a, b); }

namespace {

struct LzHamiltonian {
  LzParams params;
  bool assisted;

  Mat2 operator()(double t) const {
    const double lambda = params.lambda_at(t);
    const double delta = params.delta();
    double y = 0.0;
    if (assisted && params.rate() != 0.0) y = -0.5 * params.rate() * delta / (delta * delta + lambda * lambda);
    return pauli_combination(delta, y, lambda);
  }
};

void require_normalized(const TwoLevelState& s) {
  if (std::abs(s.norm_squared() - 1.0) > 1e-10) throw std::invalid_argument("initial state must be normalized");
}

}  // namespace

TwoLevelState evolve_two_level(const LzParams& params, LzDriver driver, const TwoLevelState& initial, double tol) {
  require_normalized(initial);
  const StepControl control = StepControl::for_tolerance(tol);
  const Spinor out =
      propagate(LzHamiltonian{params, driver == LzDriver::assisted}, 0.0, params.duration(), initial.amplitudes, control);
  return TwoLevelState{out};
}

std::vector<LzSample> evolve_two_level_sampled(const LzParams& params, LzDriver driver, const TwoLevelState& initial,
                                               double tol, int samples) {
  require_normalized(initial);
  if (samples < 1) throw std::invalid_argument("need at least one sampling interval");
  const StepControl control = StepControl::for_tolerance(tol);
  SchrodingerIntegrator integrator(LzHamiltonian{params, driver == LzDriver::assisted}, 0.0, initial.amplitudes,
                                   control);
  std::vector<LzSample> out;
  out.reserve(static_cast<std::size_t>(samples) + 1);
  out.push_back({0.0, params.lambda_at(0.0), initial});
  for (int i = 1; i <= samples; ++i) {
    const double t = i == samples ? params.duration() : params.duration() * i / samples;
    integrator.advance_to(t);
    out.push_back({t, params.lambda_at(t), TwoLevelState{integrator.state()}});
  }
  check_norm_drift(integrator.state(), control);
  return out;
}

}  // namespace qcp
