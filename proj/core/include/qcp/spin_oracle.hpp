#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "qcp/pauli.hpp"
#include "qcp/quench_engine.hpp"

namespace qcp::oracle {

// Basis convention: bit n of a basis index is 1 when spin n points down
// (sz = -1), i.e. when Jordan-Wigner fermion mode n is occupied.

inline constexpr int kAssemblyCap = 12;
inline constexpr int kEvolutionCap = 10;

using SparseOp = Eigen::SparseMatrix<cplx>;

class SpinOperator {
 public:
  SpinOperator(int n_sites, SparseOp matrix);

  int n_sites() const { return n_sites_; }
  Eigen::Index dimension() const { return matrix_.rows(); }
  const SparseOp& matrix() const { return matrix_; }

  // max |A - A^dag|
  double hermiticity_defect() const;
  // max |[A, P]| with P the parity prod_n sz_n
  double parity_commutator_norm() const;
  // Dense restriction to the parity +1 sector, rows/columns in ascending basis order.
  Eigen::MatrixXcd even_block() const;

 private:
  int n_sites_;
  SparseOp matrix_;
};

/// Basis indices with an even number of down spins (parity P = +1).
std::vector<Eigen::Index> even_parity_basis(int n_sites);

/// -sum_n (sx_n sx_{n+1} + g sz_n), periodic. For N = 2 the bond (1,2) and
/// its periodic image (2,1) are both summed, so H0 carries -2 sx sx; this is
/// the convention under which the even-sector ground energy equals
/// -sum_{k>0} eps_k.
SpinOperator build_spin_h0(int n_sites, double g);

/// dH0/dg = -sum_n sz_n.
SpinOperator build_field_derivative(int n_sites);

/// sum_n (sx_n sz...sz sy_{n+m} + sy_n sz...sz sx_{n+m}) with m-1 interior sz, periodic.
SpinOperator build_spin_h1m(int n_sites, int m);

/// sum_{m<N/2} h_m H1^[m] + (1/2) h_{N/2} H1^[N/2] with h_m by direct finite-N summation;
/// the counterdiabatic term at ramp rate r is r times this operator.
SpinOperator build_spin_h1_full(int n_sites, double g);

SpinOperator parity_operator(int n_sites);

/// Jordan-Wigner annihilators c_n = s+_n prod_{l<n} sz_l for n = 0..N-1.
std::vector<SparseOp> jw_annihilators(int n_sites);

/// sum_{k>0} psi_k^dag A(k) psi_k with psi_k = (c_k, c_{-k}^dag) and
/// c_k = e^{i pi/4} sum_n e^{-ikn} c_n / sqrt(N) (sites labelled n = 1..N).
SparseOp nambu_quadratic_form(int n_sites, const std::function<Mat2(double)>& block);

/// Max |element| of (spin H1^[m] - sum_k 4 sin(mk) psi_k^dag sy psi_k) on the even sector.
double verify_h1m_momentum_form(int n_sites, int m);

/// Same comparison for H0 against sum_k psi_k^dag (a_k . sigma) psi_k.
double verify_h0_momentum_form(int n_sites, double g);

struct MatrixElementReport {
  double max_relative_deviation = 0.0;
  double ground_diagonal = 0.0;  // |<0|H1|0>|
  int elements_checked = 0;
};

/// Checks <0|H1|n> = i g' <0|dH0/dg|n> / (E_n - E_0) for every even-sector
/// eigenstate n != 0 with |<0|dH0/dg|n>| > 1e-12, for the ramp g' = -rate.
/// Throws DegeneracyError if the even-sector ground state is degenerate.
MatrixElementReport cd_matrix_element_check(int n_sites, double g, double rate = 1.0);

/// Sorted eigenvalues of the even-parity block of build_spin_h0.
std::vector<double> even_parity_spectrum(int n_sites, double g);

/// Sorted even-sector energies predicted by free fermions:
/// -sum eps_k + sum over an even-sized set of occupied momenta +-k of eps_|k|.
std::vector<double> momentum_even_spectrum(int n_sites, double g);

/// Bogoliubov quasiparticle number gamma_k^dag gamma_k + gamma_{-k}^dag gamma_{-k}
/// of the bare chain at field g, in the spin basis.
SparseOp quasiparticle_number(int n_sites, double k, double g);

/// Ground state of build_spin_h0 restricted to the even sector, embedded in the full space.
Eigen::VectorXcd even_ground_state(int n_sites, double g);

/// Full 2^N Schrodinger propagation under H0(g(t)) + rate sum_m s_m h_m(g(t)) H1^[m]
/// (composition and truncation as in `driver`) with an adaptive Dormand-Prince 5(4) stepper.
Eigen::VectorXcd evolve_full_state(int n_sites, const QuenchProtocol& protocol, const DriverConfig& driver, double tol,
                                   const Eigen::VectorXcd& initial);

struct FullEvolutionResult {
  std::vector<double> k_grid;
  std::vector<double> p_k;
  double n_ex = 0.0;
};

/// Runs evolve_full_state from the even ground state at g_initial and counts
/// quasiparticles at g_final: p_k = <N_k> / 2, n_ex = (2/N) sum p_k.
FullEvolutionResult evolve_full(int n_sites, const QuenchProtocol& protocol, const DriverConfig& driver, double tol);

}  // namespace qcp::oracle
