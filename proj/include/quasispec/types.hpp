#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/LU>

namespace quasispec {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using Mat2 = Eigen::Matrix<Complex<Real>, 2, 2>;

template <typename Real>
using Vec2 = Eigen::Matrix<Complex<Real>, 2, 1>;

template <typename Real>
inline constexpr Real two_pi = Real(2) * std::numbers::pi_v<Real>;

/// Operator 2-norm of a 2x2 matrix from the closed-form singular values.
template <typename Real>
Real operator_norm(const Mat2<Real>& m) {
  using std::abs;
  using std::sqrt;
  const Real fro2 = m.squaredNorm();
  const Real det = abs(m.determinant());
  const Real disc = fro2 * fro2 - Real(4) * det * det;
  return sqrt((fro2 + sqrt(disc > Real(0) ? disc : Real(0))) / Real(2));
}

/// Smallest singular value, det / largest, free of cancellation.
template <typename Real>
Real min_singular_value(const Mat2<Real>& m) {
  const Real top = operator_norm(m);
  return top > Real(0) ? std::abs(m.determinant()) / top : Real(0);
}

/// Inverse of a matrix with unit determinant: [[d,-b],[-c,a]].
template <typename Real>
Mat2<Real> unimodular_inverse(const Mat2<Real>& m) {
  Mat2<Real> inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv;
}

/// Reduce a phase to [0, 1).
template <typename Real>
Real wrap_unit(Real x) {
  x -= std::floor(x);
  return x >= Real(1) ? x - Real(1) : x;
}

}  // namespace quasispec
