#include "qcp/ising_momentum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qcp/errors.hpp"
#include "qcp/two_level.hpp"

namespace qcp {

namespace {

void require_even_chain(int n_sites) {
  if (n_sites < 2 || n_sites % 2 != 0) {
    throw std::invalid_argument("chain length must be even and >= 2, got " + std::to_string(n_sites));
  }
}

// g - cos k written as (g - 1) + 2 sin^2(k/2).
double field_offset(double k, double g) {
  const double s = std::sin(0.5 * k);
  return (g - 1.0) + 2.0 * s * s;
}

// g^2 + 1 - 2 g cos k written as (g - 1)^2 + 4 g sin^2(k/2).
double kernel_denominator(double k, double g) {
  const double s = std::sin(0.5 * k);
  return (g - 1.0) * (g - 1.0) + 4.0 * g * s * s;
}

}  // namespace

ChainSpec::ChainSpec(int n_sites) : n_sites_(n_sites) { require_even_chain(n_sites); }

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

BlochVector cross(const BlochVector& a, const BlochVector& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

std::vector<double> momentum_grid(int n_sites) {
  require_even_chain(n_sites);
  std::vector<double> ks(static_cast<std::size_t>(n_sites / 2));
  for (std::size_t l = 0; l < ks.size(); ++l) {
    ks[l] = static_cast<double>(2 * l + 1) * std::numbers::pi / n_sites;
  }
  return ks;
}

BlochVector bloch_vector(double k, double g) { return {2.0 * std::sin(k), 0.0, 2.0 * field_offset(k, g)}; }

double mode_energy(double k, double g) { return 2.0 * std::sqrt(std::max(0.0, kernel_denominator(k, g))); }

ModeState mode_ground_state(double k, double g) {
  return ModeState{instantaneous_eigenbasis(bloch_vector(k, g).matrix()).ground};
}

ModeState mode_excited_state(double k, double g) {
  return ModeState{instantaneous_eigenbasis(bloch_vector(k, g).matrix()).excited};
}

double cd_kernel_exact(double k, double g) {
  const double denom = kernel_denominator(k, g);
  if (!(std::abs(denom) > 0.0)) {
    throw SingularityError("counterdiabatic kernel is singular at k=" + std::to_string(k) +
                           ", g=" + std::to_string(g));
  }
  return 0.25 * std::sin(k) / denom;
}

Mat2 free_fermion_cd(const BlochVector& a, const BlochVector& da, double rate) {
  const double eps2 = a.x * a.x + a.y * a.y + a.z * a.z;
  if (eps2 == 0.0) throw SingularityError("free-fermion counterdiabatic term needs |a| > 0");
  const BlochVector c = cross(a, da);
  const double s = rate / (2.0 * eps2);
  return pauli_combination(s * c.x, s * c.y, s * c.z);
}

Mat2 mode_hamiltonian(double k, double g, double cd_coefficient) {
  BlochVector a = bloch_vector(k, g);
  a.y += cd_coefficient;
  return a.matrix();
}

double ground_energy(int n_sites, double g) {
  double e = 0.0;
  for (double k : momentum_grid(n_sites)) e -= mode_energy(k, g);
  return e;
}

}  // namespace qcp
