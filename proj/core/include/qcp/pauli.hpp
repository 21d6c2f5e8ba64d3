#pragma once

#include <complex>

#include <Eigen/Core>

namespace qcp {

using cplx = std::complex<double>;
using Spinor = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2cd;

inline constexpr cplx kI{0.0, 1.0};

inline Mat2 sigma_x() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline Mat2 sigma_y() {
  Mat2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

inline Mat2 sigma_z() {
  Mat2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

// x*sx + y*sy + z*sz
inline Mat2 pauli_combination(double x, double y, double z) {
  Mat2 m;
  m << z, cplx(x, -y), cplx(x, y), -z;
  return m;
}

// |<a|b>|^2, insensitive to global phase.
inline double overlap_probability(const Spinor& a, const Spinor& b) {
  return std::norm(a.dot(b));
}

}  // namespace qcp
