#include "qcp/spin_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "qcp/cd_coefficients.hpp"
#include "qcp/errors.hpp"
#include "qcp/ising_momentum.hpp"

namespace qcp::oracle {

namespace {

using Index = Eigen::Index;
using Triplet = Eigen::Triplet<cplx>;

void require_size(int n_sites, int cap) {
  if (n_sites < 2 || n_sites % 2 != 0) throw std::invalid_argument("oracle chain length must be even and >= 2");
  if (n_sites > cap) {
    throw std::invalid_argument("oracle chain length " + std::to_string(n_sites) + " exceeds cap " +
                                std::to_string(cap));
  }
}

Index dim_of(int n_sites) { return Index{1} << n_sites; }

enum class Pauli { x, y, z };

struct Factor {
  int site;
  Pauli op;
};

// Matrix of a product of single-site Pauli operators on distinct sites.
SparseOp pauli_string(int n_sites, const std::vector<Factor>& factors, cplx coeff = 1.0) {
  const Index dim = dim_of(n_sites);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(dim));
  for (Index in = 0; in < dim; ++in) {
    Index out = in;
    cplx amp = coeff;
    for (const Factor& f : factors) {
      const bool down = (out >> f.site) & 1;
      switch (f.op) {
        case Pauli::x:
          out ^= Index{1} << f.site;
          break;
        case Pauli::y:
          amp *= down ? -kI : kI;
          out ^= Index{1} << f.site;
          break;
        case Pauli::z:
          if (down) amp = -amp;
          break;
      }
    }
    trips.emplace_back(out, in, amp);
  }
  SparseOp m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SparseOp diagonal_operator(int n_sites, const std::function<double(Index)>& value) {
  const Index dim = dim_of(n_sites);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(dim));
  for (Index s = 0; s < dim; ++s) {
    const double v = value(s);
    if (v != 0.0) trips.emplace_back(s, s, v);
  }
  SparseOp m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

int down_count(Index s) { return std::popcount(static_cast<unsigned long long>(s)); }

SparseOp bond_sum(int n_sites) {
  SparseOp sum(dim_of(n_sites), dim_of(n_sites));
  for (int n = 0; n < n_sites; ++n) sum += pauli_string(n_sites, {{n, Pauli::x}, {(n + 1) % n_sites, Pauli::x}});
  return sum;
}

SparseOp magnetization(int n_sites) {
  return diagonal_operator(n_sites, [n_sites](Index s) { return static_cast<double>(n_sites - 2 * down_count(s)); });
}

SparseOp adjoint(const SparseOp& a) { return SparseOp(a.adjoint()); }

// max |A_ij| over entries whose row and column are both parity-even.
double max_even_entry(const SparseOp& a) {
  double worst = 0.0;
  for (Index col = 0; col < a.outerSize(); ++col) {
    if (down_count(col) % 2 != 0) continue;
    for (SparseOp::InnerIterator it(a, col); it; ++it) {
      if (down_count(it.row()) % 2 == 0) worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

double max_abs_entry(const SparseOp& a) {
  double worst = 0.0;
  for (Index col = 0; col < a.outerSize(); ++col) {
    for (SparseOp::InnerIterator it(a, col); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

// Real symmetric even block and its eigen decomposition.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> even_eigensystem(int n_sites, double g) {
  const Eigen::MatrixXd block = build_spin_h0(n_sites, g).even_block().real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
  if (solver.info() != Eigen::Success) throw std::runtime_error("even-sector diagonalization failed");
  return solver;
}

Eigen::VectorXcd embed_even(int n_sites, const Eigen::VectorXcd& even) {
  const auto basis = even_parity_basis(n_sites);
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(dim_of(n_sites));
  for (std::size_t i = 0; i < basis.size(); ++i) full[basis[i]] = even[static_cast<Index>(i)];
  return full;
}

}  // namespace

SpinOperator::SpinOperator(int n_sites, SparseOp matrix) : n_sites_(n_sites), matrix_(std::move(matrix)) {
  matrix_.makeCompressed();
}

double SpinOperator::hermiticity_defect() const { return max_abs_entry(SparseOp(matrix_ - adjoint(matrix_))); }

double SpinOperator::parity_commutator_norm() const {
  const SparseOp p = parity_operator(n_sites_).matrix();
  return max_abs_entry(SparseOp(matrix_ * p - p * matrix_));
}

Eigen::MatrixXcd SpinOperator::even_block() const {
  const auto basis = even_parity_basis(n_sites_);
  std::vector<Index> position(static_cast<std::size_t>(dimension()), -1);
  for (std::size_t i = 0; i < basis.size(); ++i) position[static_cast<std::size_t>(basis[i])] = static_cast<Index>(i);
  const Index n = static_cast<Index>(basis.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (Index col = 0; col < matrix_.outerSize(); ++col) {
    const Index c = position[static_cast<std::size_t>(col)];
    if (c < 0) continue;
    for (SparseOp::InnerIterator it(matrix_, col); it; ++it) {
      const Index r = position[static_cast<std::size_t>(it.row())];
      if (r >= 0) out(r, c) += it.value();
    }
  }
  return out;
}

std::vector<Index> even_parity_basis(int n_sites) {
  std::vector<Index> basis;
  for (Index s = 0; s < dim_of(n_sites); ++s) {
    if (down_count(s) % 2 == 0) basis.push_back(s);
  }
  return basis;
}

SpinOperator build_spin_h0(int n_sites, double g) {
  require_size(n_sites, kAssemblyCap);
  return SpinOperator(n_sites, SparseOp(-bond_sum(n_sites) - g * magnetization(n_sites)));
}

SpinOperator build_field_derivative(int n_sites) {
  require_size(n_sites, kAssemblyCap);
  return SpinOperator(n_sites, SparseOp(-magnetization(n_sites)));
}

SpinOperator build_spin_h1m(int n_sites, int m) {
  require_size(n_sites, kAssemblyCap);
  if (m < 1 || m > n_sites / 2) {
    throw std::out_of_range("range m=" + std::to_string(m) + " outside [1, " + std::to_string(n_sites / 2) + "]");
  }
  SparseOp sum(dim_of(n_sites), dim_of(n_sites));
  for (int n = 0; n < n_sites; ++n) {
    std::vector<Factor> xy{{n, Pauli::x}};
    std::vector<Factor> yx{{n, Pauli::y}};
    for (int j = 1; j < m; ++j) {
      xy.push_back({(n + j) % n_sites, Pauli::z});
      yx.push_back({(n + j) % n_sites, Pauli::z});
    }
    xy.push_back({(n + m) % n_sites, Pauli::y});
    yx.push_back({(n + m) % n_sites, Pauli::x});
    sum += pauli_string(n_sites, xy);
    sum += pauli_string(n_sites, yx);
  }
  return SpinOperator(n_sites, std::move(sum));
}

SpinOperator build_spin_h1_full(int n_sites, double g) {
  require_size(n_sites, kAssemblyCap);
  SparseOp sum(dim_of(n_sites), dim_of(n_sites));
  for (int m = 1; m <= n_sites / 2; ++m) {
    const double weight = (2 * m == n_sites ? 0.5 : 1.0) * h_m_exact(m, g, n_sites);
    sum += weight * build_spin_h1m(n_sites, m).matrix();
  }
  return SpinOperator(n_sites, std::move(sum));
}

SpinOperator parity_operator(int n_sites) {
  require_size(n_sites, kAssemblyCap);
  return SpinOperator(n_sites, diagonal_operator(n_sites, [](Index s) { return down_count(s) % 2 == 0 ? 1.0 : -1.0; }));
}

std::vector<SparseOp> jw_annihilators(int n_sites) {
  require_size(n_sites, kAssemblyCap);
  const Index dim = dim_of(n_sites);
  std::vector<SparseOp> ops;
  for (int n = 0; n < n_sites; ++n) {
    std::vector<Triplet> trips;
    for (Index s = 0; s < dim; ++s) {
      if (!((s >> n) & 1)) continue;
      const Index below = s & ((Index{1} << n) - 1);
      const double sign = down_count(below) % 2 == 0 ? 1.0 : -1.0;
      trips.emplace_back(s ^ (Index{1} << n), s, sign);
    }
    SparseOp c(dim, dim);
    c.setFromTriplets(trips.begin(), trips.end());
    ops.push_back(std::move(c));
  }
  return ops;
}

namespace {

SparseOp momentum_annihilator(const std::vector<SparseOp>& cs, double k) {
  const int n_sites = static_cast<int>(cs.size());
  SparseOp ck(cs.front().rows(), cs.front().cols());
  const cplx phase = std::exp(kI * (std::numbers::pi / 4.0)) / std::sqrt(static_cast<double>(n_sites));
  for (int n = 0; n < n_sites; ++n) ck += (phase * std::exp(-kI * (k * (n + 1)))) * cs[static_cast<std::size_t>(n)];
  return ck;
}

struct NambuPair {
  SparseOp annihilate_k;         // c_k
  SparseOp create_minus_k;       // c_{-k}^dag
};

NambuPair nambu_pair(const std::vector<SparseOp>& cs, double k) {
  return {momentum_annihilator(cs, k), adjoint(momentum_annihilator(cs, -k))};
}

}  // namespace

SparseOp nambu_quadratic_form(int n_sites, const std::function<Mat2(double)>& block) {
  const auto cs = jw_annihilators(n_sites);
  SparseOp sum(dim_of(n_sites), dim_of(n_sites));
  for (double k : momentum_grid(n_sites)) {
    const NambuPair pair = nambu_pair(cs, k);
    const SparseOp* psi[2] = {&pair.annihilate_k, &pair.create_minus_k};
    const Mat2 a = block(k);
    for (int i = 0; i < 2; ++i) {
      const SparseOp psi_dag = adjoint(*psi[i]);
      for (int j = 0; j < 2; ++j) {
        if (a(i, j) != 0.0) sum += a(i, j) * SparseOp(psi_dag * *psi[j]);
      }
    }
  }
  sum.prune(cplx(0.0), 1e-15);
  return sum;
}

double verify_h1m_momentum_form(int n_sites, int m) {
  const SpinOperator spin = build_spin_h1m(n_sites, m);
  const SparseOp fermion = nambu_quadratic_form(n_sites, [m](double k) {
    Mat2 b;
    b << 0.0, -kI, kI, 0.0;
    return Mat2(4.0 * std::sin(m * k) * b);
  });
  return max_even_entry(SparseOp(spin.matrix() - fermion));
}

double verify_h0_momentum_form(int n_sites, double g) {
  const SpinOperator spin = build_spin_h0(n_sites, g);
  const SparseOp fermion = nambu_quadratic_form(n_sites, [g](double k) {
    Mat2 b;
    b << 2.0 * (g - std::cos(k)), 2.0 * std::sin(k), 2.0 * std::sin(k), -2.0 * (g - std::cos(k));
    return b;
  });
  return max_even_entry(SparseOp(spin.matrix() - fermion));
}

MatrixElementReport cd_matrix_element_check(int n_sites, double g, double rate) {
  require_size(n_sites, kEvolutionCap);
  const auto solver = even_eigensystem(n_sites, g);
  const Eigen::VectorXd& energies = solver.eigenvalues();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  const double gap = energies[1] - energies[0];
  if (gap < 1e-10 * std::max(1.0, std::abs(energies[0]))) {
    std::ostringstream msg;
    msg << "even-sector ground state degenerate at g=" << g << " (gap " << gap << ")";
    throw DegeneracyError(msg.str());
  }
  const Eigen::MatrixXcd h1 = rate * build_spin_h1_full(n_sites, g).even_block();
  const Eigen::MatrixXd dh0 = build_field_derivative(n_sites).even_block().real();
  const Eigen::VectorXcd ground = vecs.col(0).cast<cplx>();
  const Eigen::RowVectorXcd lhs = ground.adjoint() * h1 * vecs.cast<cplx>();
  const Eigen::RowVectorXd coupling = vecs.col(0).transpose() * dh0 * vecs;
  const double g_dot = -rate;

  MatrixElementReport report;
  report.ground_diagonal = std::abs(lhs[0]);
  for (Index n = 1; n < energies.size(); ++n) {
    if (std::abs(coupling[n]) <= 1e-12) continue;
    const cplx rhs = kI * g_dot * coupling[n] / (energies[n] - energies[0]);
    report.max_relative_deviation = std::max(report.max_relative_deviation, std::abs(lhs[n] - rhs) / std::abs(rhs));
    ++report.elements_checked;
  }
  return report;
}

std::vector<double> even_parity_spectrum(int n_sites, double g) {
  const auto solver = even_eigensystem(n_sites, g);
  std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> momentum_even_spectrum(int n_sites, double g) {
  require_size(n_sites, kAssemblyCap);
  const auto ks = momentum_grid(n_sites);
  // Occupation bitmask over the N momenta +k_1..+k_{N/2}, -k_1..-k_{N/2}.
  std::vector<double> eps;
  for (double k : ks) eps.push_back(mode_energy(k, g));
  double e0 = 0.0;
  for (double e : eps) e0 -= e;
  std::vector<double> out;
  for (Index mask = 0; mask < dim_of(n_sites); ++mask) {
    if (down_count(mask) % 2 != 0) continue;
    double e = e0;
    for (int q = 0; q < n_sites; ++q) {
      if ((mask >> q) & 1) e += eps[static_cast<std::size_t>(q % (n_sites / 2))];
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SparseOp quasiparticle_number(int n_sites, double k, double g) {
  const auto cs = jw_annihilators(n_sites);
  const NambuPair pair = nambu_pair(cs, k);
  Eigen::Matrix2d block;
  block << 2.0 * (g - std::cos(k)), 2.0 * std::sin(k), 2.0 * std::sin(k), -2.0 * (g - std::cos(k));
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(block);
  // Column 0: lower eigenvector, column 1: upper.
  const Eigen::Vector2d lower = solver.eigenvectors().col(0);
  const Eigen::Vector2d upper = solver.eigenvectors().col(1);
  // phi = w^T psi; the upper combination annihilates gamma_k, the lower creates gamma_{-k}.
  const SparseOp gamma_k = SparseOp(upper[0] * pair.annihilate_k + upper[1] * pair.create_minus_k);
  const SparseOp gamma_minus_k_dag = SparseOp(lower[0] * pair.annihilate_k + lower[1] * pair.create_minus_k);
  return SparseOp(adjoint(gamma_k) * gamma_k + gamma_minus_k_dag * adjoint(gamma_minus_k_dag));
}

Eigen::VectorXcd even_ground_state(int n_sites, double g) {
  const auto solver = even_eigensystem(n_sites, g);
  return embed_even(n_sites, solver.eigenvectors().col(0).cast<cplx>());
}

Eigen::VectorXcd evolve_full_state(int n_sites, const QuenchProtocol& protocol, const DriverConfig& driver, double tol,
                                   const Eigen::VectorXcd& initial) {
  require_size(n_sites, kEvolutionCap);
  if (driver.includes_h1()) driver.cd.validate(n_sites);
  const Index dim = dim_of(n_sites);
  if (initial.size() != dim) throw std::invalid_argument("initial state has wrong dimension");

  const SparseOp bonds = bond_sum(n_sites);
  const SparseOp mag = magnetization(n_sites);
  std::vector<SparseOp> strings;
  std::vector<double> weights;  // filter * half-weight
  const int cutoff = driver.includes_h1() ? driver.cd.cutoff : 0;
  for (int m = 1; m <= cutoff; ++m) {
    strings.push_back(build_spin_h1m(n_sites, m).matrix());
    weights.push_back(filter_weight(driver.cd.filter, m, cutoff) * (2 * m == n_sites ? 0.5 : 1.0));
  }
  const bool exact = driver.cd.coeff_mode == CoeffMode::exact_finite_n;

  using State = std::vector<cplx>;
  auto rhs = [&](const State& x, State& dxdt, double t) {
    const double g = kCriticalField - protocol.rate() * t;
    Eigen::Map<const Eigen::VectorXcd> psi(x.data(), dim);
    Eigen::Map<Eigen::VectorXcd> out(dxdt.data(), dim);
    out.setZero();
    if (driver.includes_h0()) {
      out.noalias() -= bonds * psi;
      out.noalias() -= g * (mag * psi);
    }
    for (std::size_t i = 0; i < strings.size(); ++i) {
      const int m = static_cast<int>(i) + 1;
      const double h = exact ? h_m_exact(m, g, n_sites) : h_m_analytic(m, g);
      out.noalias() += cplx(protocol.rate() * weights[i] * h) * (strings[i] * psi);
    }
    out *= -kI;
  };

  namespace odeint = boost::numeric::odeint;
  State state(initial.data(), initial.data() + dim);
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, rhs, state, protocol.t_start(), protocol.t_end(),
                             (protocol.t_end() - protocol.t_start()) * 1e-4);
  return Eigen::Map<const Eigen::VectorXcd>(state.data(), dim);
}

FullEvolutionResult evolve_full(int n_sites, const QuenchProtocol& protocol, const DriverConfig& driver, double tol) {
  const Eigen::VectorXcd psi0 = even_ground_state(n_sites, protocol.g_initial());
  const Eigen::VectorXcd psi = evolve_full_state(n_sites, protocol, driver, tol, psi0);
  FullEvolutionResult result;
  result.k_grid = momentum_grid(n_sites);
  double sum = 0.0;
  for (double k : result.k_grid) {
    const SparseOp number = quasiparticle_number(n_sites, k, protocol.g_final());
    const double occupation = psi.dot(number * psi).real();
    result.p_k.push_back(0.5 * occupation);
    sum += 0.5 * occupation;
  }
  result.n_ex = 2.0 * sum / n_sites;
  return result;
}

}  // namespace qcp::oracle
