#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "quasispec/errors.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/types.hpp"

namespace quasispec {

/// A cocycle iterate stored as exp(log_scale) * matrix with ||matrix|| = 1.
template <typename Real>
struct Transfer {
  Mat2<Real> matrix = Mat2<Real>::Identity();
  Real log_scale = 0;

  Real log_norm() const { return std::log(operator_norm(matrix)) + log_scale; }

  /// Determinant of the exact (unscaled) product.
  Complex<Real> determinant() const {
    return matrix.determinant() * std::exp(Real(2) * log_scale);
  }

  Mat2<Real> value() const { return matrix * std::exp(log_scale); }

  void renormalize() {
    const Real n = operator_norm(matrix);
    if (n > Real(0)) {
      matrix /= n;
      log_scale += std::log(n);
    }
  }

  /// Composition (*this) * other, i.e. apply `other` first.
  Transfer operator*(const Transfer& other) const {
    Transfer out{matrix * other.matrix, log_scale + other.log_scale};
    out.renormalize();
    return out;
  }
};

inline constexpr int kRenormalizeEvery = 32;

/// Schrodinger step [[z - v(x), -1], [1, 0]].
template <typename Real>
Mat2<Real> step_matrix(Complex<Real> z, const Potential& v, Real x) {
  Mat2<Real> a;
  a << z - v(wrap_unit(x)), Complex<Real>(-1), Complex<Real>(1), Complex<Real>(0);
  return a;
}

/// A_n(x) = A(x + (n-1) alpha) ... A(x); negative n uses exact inverses of
/// the unit-determinant steps, A_{-n}(x) = A(x - n alpha)^{-1} ... A(x - alpha)^{-1}.
template <typename Real>
Transfer<Real> iterate(Complex<Real> z, const Potential& v, Real alpha, Real x, std::int64_t n) {
  Transfer<Real> t;
  if (n == 0) return t;
  Mat2<Real> m = Mat2<Real>::Identity();
  const std::int64_t steps = n > 0 ? n : -n;
  for (std::int64_t j = 0; j < steps; ++j) {
    if (n > 0) {
      const Real phase = x + Real(j) * alpha;
      const Complex<Real> d = z - v(wrap_unit(phase));
      // [[d,-1],[1,0]] * m without a full 2x2 product.
      for (int c = 0; c < 2; ++c) {
        const Complex<Real> top = d * m(0, c) - m(1, c);
        m(1, c) = m(0, c);
        m(0, c) = top;
      }
    } else {
      const Real phase = x - Real(j + 1) * alpha;
      const Complex<Real> d = z - v(wrap_unit(phase));
      // [[0,1],[-1,d]] * m
      for (int c = 0; c < 2; ++c) {
        const Complex<Real> bottom = -m(0, c) + d * m(1, c);
        m(0, c) = m(1, c);
        m(1, c) = bottom;
      }
    }
    if ((j + 1) % kRenormalizeEvery == 0) {
      const Real nm = operator_norm(m);
      m /= nm;
      t.log_scale += std::log(nm);
    }
  }
  t.matrix = m;
  t.renormalize();
  return t;
}

enum class PhaseGrid { Orbit, Uniform };

/// (1/n) times the average of ln ||A_n(x_j)|| over `x_grid` phases, either
/// the orbit x_j = x0 + j alpha or the uniform grid x_j = x0 + j / x_grid.
template <typename Real>
Real lyapunov(Real E, const Potential& v, Real alpha, std::int64_t n, int x_grid,
              PhaseGrid grid = PhaseGrid::Orbit, Real x0 = 0) {
  require(n >= 1 && x_grid >= 1, "lyapunov needs n >= 1 and x_grid >= 1");
  Real acc = 0;
  for (int j = 0; j < x_grid; ++j) {
    const Real x = grid == PhaseGrid::Orbit ? wrap_unit(x0 + Real(j) * alpha) : wrap_unit(x0 + Real(j) / Real(x_grid));
    acc += iterate<Real>(Complex<Real>(E, 0), v, alpha, x, n).log_norm();
  }
  return acc / (Real(x_grid) * Real(n));
}

struct GrowthPoint {
  std::int64_t s = 0;
  double sup_norm = 0;      // may be +inf when the log exceeds double range
  double log_sup_norm = 0;
};

/// sup over the uniform phase grid {j / phases} of ||A_s(x)|| for s = 1..s_max.
template <typename Real>
std::vector<GrowthPoint> growth_profile(Real E, const Potential& v, Real alpha, std::int64_t s_max,
                                        int phases = 64) {
  require(s_max >= 1 && phases >= 1, "growth profile needs s_max >= 1 and phases >= 1");
  std::vector<double> best(static_cast<std::size_t>(s_max), -std::numeric_limits<double>::infinity());
  for (int p = 0; p < phases; ++p) {
    const Real x = Real(p) / Real(phases);
    Mat2<Real> m = Mat2<Real>::Identity();
    Real log_scale = 0;
    for (std::int64_t s = 1; s <= s_max; ++s) {
      const Real phase = x + Real(s - 1) * alpha;
      const Complex<Real> d = Complex<Real>(E, 0) - v(wrap_unit(phase));
      for (int c = 0; c < 2; ++c) {
        const Complex<Real> top = d * m(0, c) - m(1, c);
        m(1, c) = m(0, c);
        m(0, c) = top;
      }
      const Real nm = operator_norm(m);
      const double ln = static_cast<double>(std::log(nm) + log_scale);
      auto& slot = best[static_cast<std::size_t>(s - 1)];
      slot = std::max(slot, ln);
      if (s % kRenormalizeEvery == 0) {
        m /= nm;
        log_scale += std::log(nm);
      }
    }
  }
  std::vector<GrowthPoint> out;
  out.reserve(best.size());
  for (std::size_t i = 0; i < best.size(); ++i)
    out.push_back({static_cast<std::int64_t>(i + 1), std::exp(best[i]), best[i]});
  return out;
}

/// Least-squares slope of ln sup||A_s|| against ln(1 + s) on a geometric
/// subsample of s in [s_min, s_max].
inline double fit_growth_exponent(const std::vector<GrowthPoint>& profile, std::int64_t s_min = 10,
                                  int samples = 40) {
  require(!profile.empty(), "empty growth profile");
  const std::int64_t s_max = profile.back().s;
  require(s_min >= 1 && s_min < s_max, "growth fit window is empty");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  std::int64_t last = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : double(i) / double(samples - 1);
    const auto s = static_cast<std::int64_t>(std::llround(double(s_min) * std::pow(double(s_max) / double(s_min), t)));
    if (s == last) continue;
    last = s;
    const double x = std::log1p(double(s));
    const double y = profile[static_cast<std::size_t>(s - 1)].log_sup_norm;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Solution u_0..u_L of H u = z u at base phase x with the boundary condition
/// u_0 cos(beta) + u_1 sin(beta) = 0, |u_0|^2 + |u_1|^2 = 1.
template <typename Real>
struct SolutionSeq {
  Real beta = 0;
  Complex<Real> z{};
  Real x = 0;
  std::vector<Complex<Real>> values;

  /// (sum_{j=1}^{L} |u_j|^2)^{1/2}
  Real norm(std::size_t L) const {
    Real acc = 0;
    for (std::size_t j = 1; j <= L && j < values.size(); ++j) acc += std::norm(values[j]);
    return std::sqrt(acc);
  }

  /// max over interior j of |u_{j+1} + u_{j-1} + v(x + j alpha) u_j - z u_j|
  Real recurrence_residual(const Potential& v, Real alpha) const {
    Real worst = 0;
    for (std::size_t j = 1; j + 1 < values.size(); ++j) {
      const Real vj = v(wrap_unit(x + Real(j) * alpha));
      worst = std::max(worst, std::abs(values[j + 1] + values[j - 1] + (vj - z) * values[j]));
    }
    return worst;
  }
};

template <typename Real>
SolutionSeq<Real> solution(Real beta, Complex<Real> z, const Potential& v, Real alpha, Real x, std::int64_t L) {
  require(L >= 1, "solution length must be at least 1");
  SolutionSeq<Real> u{beta, z, x, {}};
  u.values.resize(static_cast<std::size_t>(L) + 1);
  u.values[0] = std::sin(beta);
  u.values[1] = -std::cos(beta);
  for (std::int64_t j = 1; j < L; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    u.values[jj + 1] = (z - v(wrap_unit(x + Real(j) * alpha))) * u.values[jj] - u.values[jj - 1];
  }
  return u;
}

}  // namespace quasispec
