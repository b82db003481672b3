#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "quasispec/errors.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/types.hpp"

namespace quasispec {

/// A point of the open upper half-plane.
template <typename Real>
class HalfPlanePoint {
 public:
  explicit HalfPlanePoint(Complex<Real> value) : value_(value) {
    if (!(value.imag() > Real(0))) throw PreconditionError("value is not in the upper half-plane");
  }
  Complex<Real> value() const { return value_; }
  Real imag() const { return value_.imag(); }
  Real abs() const { return std::abs(value_); }

 private:
  Complex<Real> value_;
};

struct MOptions {
  double tol = 1e-10;
  std::int64_t depth_cap = 10'000'000;
  std::int64_t min_depth = 64;
};

template <typename Real>
struct MEstimate {
  HalfPlanePoint<Real> value;
  std::int64_t depth = 0;
  Real est_error = 0;
};

/// m+(z) = -u_1/u_0 for the solution that is l^2 at +infinity, at base phase
/// theta (sites carry v(theta + n alpha)).
///
/// Backward coefficient stripping m_{n-1} = -1/(z - v(theta + n alpha) + m_n)
/// from depth N with the two seeds m_N = i and m_N = 2i; N doubles until the
/// seeds agree to `tol`.
template <typename Real>
MEstimate<Real> m_plus(Complex<Real> z, const Potential& v, Real alpha, Real theta, const MOptions& opt = {}) {
  require(z.imag() > Real(0), "m-functions need Im z > 0");
  require(opt.tol > 0, "tolerance must be positive");
  const double guess = std::log(1.0 / opt.tol) / static_cast<double>(z.imag());
  std::int64_t depth = std::max<std::int64_t>(opt.min_depth, static_cast<std::int64_t>(std::min(guess, 1e18)));
  depth = std::min(depth, opt.depth_cap);
  while (true) {
    Complex<Real> a(0, 1), b(0, 2);
    for (std::int64_t n = depth; n >= 1; --n) {
      const Complex<Real> shift = z - v(wrap_unit(theta + Real(n) * alpha));
      a = Real(-1) / (shift + a);
      b = Real(-1) / (shift + b);
    }
    const Real gap = std::abs(a - b);
    if (gap < Real(opt.tol)) return {HalfPlanePoint<Real>(a), depth, gap};
    if (depth >= opt.depth_cap) {
      std::ostringstream os;
      os << "m-function seeds still differ by " << static_cast<double>(gap) << " at depth cap " << opt.depth_cap
         << " (Im z = " << static_cast<double>(z.imag()) << ")";
      throw NoConvergence(os.str());
    }
    depth = std::min(depth * 2, opt.depth_cap);
  }
}

/// m-(z) = +u_1/u_0 for the solution that is l^2 at -infinity.
///
/// Reflection identity: the left half-line function l_1 = -u_0/u_1 is the m+
/// of x -> v(-x) at phase -theta - alpha, and m- = -1/l_1.
template <typename Real>
MEstimate<Real> m_minus(Complex<Real> z, const Potential& v, Real alpha, Real theta, const MOptions& opt = {}) {
  const auto left = m_plus<Real>(z, v.reflected(), alpha, -theta - alpha, opt);
  const Complex<Real> l = left.value.value();
  return {HalfPlanePoint<Real>(Real(-1) / l), left.depth, left.est_error / std::norm(l)};
}

/// M = (m+ m- - 1)/(m+ + m-), the Borel transform of mu^{e_0} + mu^{e_1}.
template <typename Real>
HalfPlanePoint<Real> M_function(const HalfPlanePoint<Real>& mp, const HalfPlanePoint<Real>& mm) {
  const Complex<Real> a = mp.value(), b = mm.value();
  return HalfPlanePoint<Real>((a * b - Real(1)) / (a + b));
}

template <typename Real>
Real phi(const HalfPlanePoint<Real>& z) {
  return (Real(1) + std::norm(z.value())) / (Real(2) * z.imag());
}

/// psi(z) = sup_beta |z_beta| = phi + sqrt(phi^2 - 1).
template <typename Real>
Real psi(const HalfPlanePoint<Real>& z) {
  const Real f = phi(z);
  return f + std::sqrt(std::max(f * f - Real(1), Real(0)));
}

/// z_beta = R_{-beta/2pi} . z = (z cos b + sin b)/(-z sin b + cos b). A pole
/// is returned as (+inf, 0) so that |.| reads +inf.
template <typename Real>
Complex<Real> rotate_beta(Complex<Real> z, Real beta) {
  const Real c = std::cos(beta), s = std::sin(beta);
  const Complex<Real> den = -z * s + c;
  if (den == Complex<Real>(0)) return {std::numeric_limits<Real>::infinity(), Real(0)};
  return (z * c + s) / den;
}

template <typename Real>
Complex<Real> rotate_beta(const HalfPlanePoint<Real>& z, Real beta) {
  return rotate_beta<Real>(z.value(), beta);
}

template <typename Real>
struct MTriple {
  HalfPlanePoint<Real> m_plus;
  HalfPlanePoint<Real> m_minus;
  HalfPlanePoint<Real> M;
  Complex<Real> z;
  std::int64_t truncation_depth = 0;
  Real est_error = 0;
};

template <typename Real>
MTriple<Real> m_triple(Complex<Real> z, const Potential& v, Real alpha, Real theta, const MOptions& opt = {}) {
  const auto p = m_plus<Real>(z, v, alpha, theta, opt);
  const auto m = m_minus<Real>(z, v, alpha, theta, opt);
  const Complex<Real> a = p.value.value(), b = m.value.value();
  const Complex<Real> s2 = (a + b) * (a + b);
  // |dM/dm+| = |m-^2 + 1| / |m+ + m-|^2 and symmetrically.
  const Real err = std::abs(b * b + Real(1)) / std::abs(s2) * p.est_error +
                   std::abs(a * a + Real(1)) / std::abs(s2) * m.est_error;
  return {p.value, m.value, M_function(p.value, m.value), z, std::max(p.depth, m.depth), err};
}

}  // namespace quasispec
