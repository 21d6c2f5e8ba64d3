#pragma once

#include <vector>

#include "qcp/pauli.hpp"

namespace qcp {

inline constexpr double kCriticalField = 1.0;

/// Periodic transverse-field Ising chain H0 = -sum_n (sx_n sx_{n+1} + g sz_n)
/// with an even number of sites; only the even-parity sector (anti-periodic
/// fermions) is represented.
class ChainSpec {
 public:
  explicit ChainSpec(int n_sites);

  int n_sites() const { return n_sites_; }
  int mode_count() const { return n_sites_ / 2; }

 private:
  int n_sites_;
};

/// Real 3-vector a defining the mode Hamiltonian a . sigma.
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Mat2 matrix() const { return pauli_combination(x, y, z); }
};

BlochVector cross(const BlochVector& a, const BlochVector& b);

/// Nambu amplitudes (u, v) of the pair (c_k^dag, c_{-k}): u multiplies the
/// doubly occupied pair state, v the pair vacuum.
struct ModeState {
  Spinor amplitudes = Spinor(0.0, 1.0);

  cplx u() const { return amplitudes[0]; }
  cplx v() const { return amplitudes[1]; }
  double norm_squared() const { return amplitudes.squaredNorm(); }
};

/// Positive anti-periodic momenta pi/N, 3pi/N, ..., (N-1)pi/N in ascending order.
/// Throws std::invalid_argument for odd or non-positive N.
std::vector<double> momentum_grid(int n_sites);

/// (2 sin k, 0, 2 (g - cos k)).
BlochVector bloch_vector(double k, double g);

/// eps_k = 2 sqrt(g^2 + 1 - 2 g cos k), evaluated without cancellation near k = 0, g = 1.
double mode_energy(double k, double g);

ModeState mode_ground_state(double k, double g);
ModeState mode_excited_state(double k, double g);

/// f(k) = sin k / (4 (g^2 + 1 - 2 g cos k)). Throws SingularityError where the
/// denominator vanishes (k = 0 with g = 1, k = pi with g = -1).
double cd_kernel_exact(double k, double g);

/// rate / (2 |a|^2) (a x da) . sigma. Throws SingularityError when |a| = 0.
Mat2 free_fermion_cd(const BlochVector& a, const BlochVector& da, double rate);

/// bloch_vector(k, g) . sigma + cd_coefficient * sy.
Mat2 mode_hamiltonian(double k, double g, double cd_coefficient);

/// Chain ground energy -sum_{k>0} eps_k in the even-parity sector.
double ground_energy(int n_sites, double g);

}  // namespace qcp
