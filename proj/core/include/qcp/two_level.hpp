#pragma once

#include <vector>

#include "qcp/integrator.hpp"
#include "qcp/pauli.hpp"

namespace qcp {

/// Landau-Zener sweep H0(t) = lambda(t) sz + delta sx with an affine
/// lambda(t) = lambda_i + rate * t over t in [0, duration].
///
/// A nonzero rate fixes duration = (lambda_f - lambda_i) / rate; a zero rate
/// is a hold at constant lambda for an explicit duration.
class LzParams {
 public:
  static LzParams ramp(double delta, double lambda_i, double lambda_f, double rate);
  static LzParams hold(double delta, double lambda, double duration);

  double delta() const { return delta_; }
  double lambda_initial() const { return lambda_i_; }
  double lambda_final() const { return lambda_f_; }
  double rate() const { return rate_; }
  double duration() const { return duration_; }

  // Exact at both endpoints.
  double lambda_at(double t) const;

 private:
  LzParams(double delta, double lambda_i, double lambda_f, double rate, double duration)
      : delta_(delta), lambda_i_(lambda_i), lambda_f_(lambda_f), rate_(rate), duration_(duration) {}

  double delta_;
  double lambda_i_;
  double lambda_f_;
  double rate_;
  double duration_;
};

struct TwoLevelState {
  Spinor amplitudes = Spinor(1.0, 0.0);

  double norm_squared() const { return amplitudes.squaredNorm(); }
};

enum class LzDriver { bare, assisted };

struct Eigenbasis {
  Spinor ground;
  Spinor excited;
  double ground_energy;
  double excited_energy;
};

Mat2 lz_hamiltonian(double lambda, double delta);

/// Counterdiabatic term -rate * delta / (2 (delta^2 + lambda^2)) * sy.
/// Throws SingularityError at lambda = delta = 0.
Mat2 lz_cd_term(double lambda, double delta, double rate);

/// Eigenpair of a 2x2 Hermitian matrix in a fixed gauge: the first nonzero
/// component of each eigenvector is real and positive. For real matrices the
/// vectors are real, so <n|d_lambda n> vanishes identically.
/// Throws DegeneracyError when the gap falls below 1e-14 * max(|H_ij|, 1).
Eigenbasis instantaneous_eigenbasis(const Mat2& h);

/// Fidelity |<a|b>|^2 (global phase discarded).
double fidelity(const Spinor& a, const Spinor& b);

TwoLevelState evolve_two_level(const LzParams& params, LzDriver driver, const TwoLevelState& initial, double tol);

struct LzSample {
  double time;
  double lambda;
  TwoLevelState state;
};

/// Same propagation as `evolve_two_level`, recording the state at
/// `samples` + 1 equally spaced times including both endpoints.
std::vector<LzSample> evolve_two_level_sampled(const LzParams& params, LzDriver driver, const TwoLevelState& initial,
                                               double tol, int samples);

}  // namespace qcp
