#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "quasispec/cocycle.hpp"
#include "quasispec/errors.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/weyl.hpp"

namespace quasispec {

/// Jitomirskaya-Last bracket constant 5 + sqrt(24) and its kkl refinement.
inline constexpr double kJLConstant = 5.0 + 4.898979485566356;  // 5 + sqrt(24)
inline constexpr double kKKLConstant = 2.0 + 1.7320508075688772;  // 2 + sqrt(3)

/// P_(k) = sum_{j=1}^k A_{2j-1}(x+alpha)^* A_{2j-1}(x+alpha) at a real energy.
template <typename Real>
struct PMatrix {
  std::int64_t k = 0;
  Eigen::Matrix<Real, 2, 2> entries;
  Real x = 0;
  Real E = 0;
  /// det P_(k) as the Cauchy-Binet sum of squared 2x2 minors, which is a sum
  /// of positive terms and stays accurate when P is badly conditioned.
  Real det = 0;

  Real trace() const { return entries.trace(); }
  Real det_direct() const { return entries.determinant(); }

  /// ||P|| (largest eigenvalue).
  Real norm() const {
    const Real half_diff = (entries(0, 0) - entries(1, 1)) / Real(2);
    return trace() / Real(2) + std::hypot(half_diff, entries(0, 1));
  }

  /// ||P^{-1}||^{-1} = det / ||P||.
  Real min_eigenvalue() const { return det / norm(); }

  /// <P w, w> for w = (u_1, u_0).
  Real quadratic_form(Real u1, Real u0) const {
    return entries(0, 0) * u1 * u1 + Real(2) * entries(0, 1) * u1 * u0 + entries(1, 1) * u0 * u0;
  }
};

/// P_(k) for every k in `ks` (any order; output follows the sorted order).
template <typename Real>
std::vector<PMatrix<Real>> p_matrices(Real E, const Potential& v, Real alpha, Real x, std::vector<std::int64_t> ks) {
  require(!ks.empty(), "need at least one k");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  require(ks.front() >= 1, "k must be at least 1");
  const std::int64_t K = ks.back();
  const std::size_t sites = static_cast<std::size_t>(2 * K);

  // d[l] = E - v(x + l alpha), so that u_{l+1} = d[l] u_l - u_{l-1}.
  std::vector<Real> d(sites + 1);
  for (std::size_t l = 1; l <= sites; ++l) d[l] = E - v(wrap_unit(x + Real(l) * alpha));

  // Column sums c[l] = sum_{i<l} W(i,l)^2, where W(i,.) is the solution with
  // W(i,i) = 0, W(i,i+1) = 1 (the 2x2 minors of the stacked A_{2j-1}).
  std::vector<Real> c(sites + 1, Real(0));
  for (std::size_t i = 1; i < sites; ++i) {
    Real prev = 0, cur = 1;
    c[i + 1] += Real(1);
    for (std::size_t l = i + 1; l < sites; ++l) {
      const Real next = d[l] * cur - prev;
      prev = cur;
      cur = next;
      c[l + 1] += cur * cur;
    }
  }

  std::vector<PMatrix<Real>> out;
  out.reserve(ks.size());
  Eigen::Matrix<Real, 2, 2> B;
  B << d[1], Real(-1), Real(1), Real(0);
  Eigen::Matrix<Real, 2, 2> P = Eigen::Matrix<Real, 2, 2>::Zero();
  Real det = 0;
  std::size_t next = 0;
  for (std::int64_t j = 1; j <= K; ++j) {
    P.noalias() += B.transpose() * B;
    det += c[static_cast<std::size_t>(2 * j - 1)] + c[static_cast<std::size_t>(2 * j)];
    if (j == ks[next]) {
      PMatrix<Real> pm;
      pm.k = j;
      pm.entries = (P + P.transpose()) / Real(2);
      pm.x = x;
      pm.E = E;
      pm.det = det;
      out.push_back(pm);
      ++next;
    }
    if (j < K) {
      for (std::size_t l : {static_cast<std::size_t>(2 * j), static_cast<std::size_t>(2 * j + 1)}) {
        for (int col = 0; col < 2; ++col) {
          const Real top = d[l] * B(0, col) - B(1, col);
          B(1, col) = B(0, col);
          B(0, col) = top;
        }
      }
    }
  }
  return out;
}

template <typename Real>
PMatrix<Real> p_matrix(Real E, const Potential& v, Real alpha, Real x, std::int64_t k) {
  return p_matrices<Real>(E, v, alpha, x, {k}).front();
}

template <typename Real>
struct BetaScanResult {
  Real det = 0;
  Real beta = 0;  // minimiser in [0, pi)
};

/// ||u^beta||_L^2 with L = 2k, from the explicit solution.
template <typename Real>
Real solution_norm2(Real beta, Real E, const Potential& v, Real alpha, Real x, std::int64_t k) {
  const auto u = solution<Real>(beta, Complex<Real>(E, 0), v, alpha, x, 2 * k);
  const Real n = u.norm(static_cast<std::size_t>(2 * k));
  return n * n;
}

/// inf over beta of ||u^beta||^2 ||u^{beta+pi/2}||^2: grid search on [0, pi)
/// followed by golden-section refinement to 1e-10 in beta. Independent of
/// the P_(k) summation.
template <typename Real>
BetaScanResult<Real> det_via_beta_scan(Real E, const Potential& v, Real alpha, Real x, std::int64_t k,
                                       int grid = 256) {
  require(grid >= 8, "beta grid needs at least 8 points");
  const Real pi = std::numbers::pi_v<Real>;
  auto f = [&](Real b) {
    return solution_norm2<Real>(b, E, v, alpha, x, k) * solution_norm2<Real>(b + pi / Real(2), E, v, alpha, x, k);
  };
  const Real h = pi / Real(grid);
  int best = 0;
  Real best_val = f(Real(0));
  for (int i = 1; i < grid; ++i) {
    const Real val = f(h * Real(i));
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  Real lo = h * Real(best - 1), hi = h * Real(best + 1);
  const Real inv_phi = (std::sqrt(Real(5)) - Real(1)) / Real(2);
  Real a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
  Real fa = f(a), fb = f(b);
  while (hi - lo > Real(1e-10)) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = f(b);
    }
  }
  Real beta = (lo + hi) / Real(2);
  Real val = f(beta);
  if (best_val < val) {
    val = best_val;
    beta = h * Real(best);
  }
  beta -= pi * std::floor(beta / pi);
  return {val, beta};
}

struct SubordinacyRow {
  std::int64_t k = 0;
  double norm_P = 0;
  double det_P = 0;
  double eps_k = 0;
  double psi_mplus = 0;
  double ratio_jl = 0;     // psi(m+(E + i eps_k)) / (2 eps_k ||P_(k)||)
  double ratio_blabl = 0;  // ||P_(k)|| ||P_(k)^{-1}||^3
};

struct SubordinacyProfile {
  std::vector<SubordinacyRow> rows;
};

/// k = ceil(1.3^j) up to k_max, deduplicated.
inline std::vector<std::int64_t> geometric_k_list(std::int64_t k_max, double ratio = 1.3) {
  std::vector<std::int64_t> ks;
  for (double t = 1.0; ; t *= ratio) {
    const auto k = static_cast<std::int64_t>(std::ceil(t - 1e-9));
    if (k > k_max) break;
    if (ks.empty() || ks.back() != k) ks.push_back(k);
  }
  if (ks.empty() || ks.back() != k_max) ks.push_back(k_max);
  return ks;
}

/// Rows stop once eps_k drops below `eps_floor`, where the m-function depth
/// (about ln(1/tol)/eps) would exceed its cap; off the spectrum this happens
/// after a few k because det P_(k) grows exponentially.
template <typename Real>
SubordinacyProfile profile(Real E, const Potential& v, Real alpha, Real theta, const std::vector<std::int64_t>& ks,
                           const MOptions& opt = {}, double eps_floor = 1e-6) {
  SubordinacyProfile prof;
  for (const auto& p : p_matrices<Real>(E, v, alpha, theta, ks)) {
    SubordinacyRow row;
    row.k = p.k;
    const Real norm = p.norm();
    const Real eps = Real(1) / (Real(2) * std::sqrt(p.det));
    if (!(eps >= Real(eps_floor))) break;
    const auto m = m_plus<Real>(Complex<Real>(E, eps), v, alpha, theta, opt);
    const Real ps = psi(m.value);
    const Real lo = p.min_eigenvalue();
    row.norm_P = static_cast<double>(norm);
    row.det_P = static_cast<double>(p.det);
    row.eps_k = static_cast<double>(eps);
    row.psi_mplus = static_cast<double>(ps);
    row.ratio_jl = static_cast<double>(ps / (Real(2) * eps * norm));
    row.ratio_blabl = static_cast<double>(norm / (lo * lo * lo));
    prof.rows.push_back(row);
  }
  return prof;
}

struct JLBracket {
  double eps = 0;            // solves ||u^b|| ||u^{b+pi/2}|| = 1/(2 eps)
  double norm_beta = 0;
  double norm_perp = 0;
  double value = 0;          // |m+_beta(E + i eps)| ||u^b|| / ||u^{b+pi/2}||
  double relation_residual = 0;
  bool inside = false;       // value in (5 - sqrt24, 5 + sqrt24)
  double kkl_eps = 0;        // solves det P_(k) = 1/eps^2
  double kkl_value = 0;      // psi(m+(E + i eps)) / (eps ||P_(k)||)
  bool kkl_inside = false;   // value in (2 - sqrt3, 2 + sqrt3)
};

/// Checks the Jitomirskaya-Last bracket at L = 2k for boundary angle beta,
/// and the kkl variant at the scale det P_(k) = 1/eps^2. Both scale
/// relations are monotone in eps and solved in closed form.
template <typename Real>
JLBracket jl_bracket_check(Real E, const Potential& v, Real alpha, Real theta, Real beta, std::int64_t k,
                           const MOptions& opt = {}) {
  const Real pi = std::numbers::pi_v<Real>;
  JLBracket out;
  const Real a = std::sqrt(solution_norm2<Real>(beta, E, v, alpha, theta, k));
  const Real b = std::sqrt(solution_norm2<Real>(beta + pi / Real(2), E, v, alpha, theta, k));
  const Real eps = Real(1) / (Real(2) * a * b);
  const auto m = m_plus<Real>(Complex<Real>(E, eps), v, alpha, theta, opt);
  const Real value = std::abs(rotate_beta<Real>(m.value, beta)) * a / b;
  out.eps = static_cast<double>(eps);
  out.norm_beta = static_cast<double>(a);
  out.norm_perp = static_cast<double>(b);
  out.value = static_cast<double>(value);
  out.relation_residual = static_cast<double>(std::abs(a * b * Real(2) * eps - Real(1)));
  out.inside = out.value > 1.0 / kJLConstant && out.value < kJLConstant;

  const auto p = p_matrix<Real>(E, v, alpha, theta, k);
  const Real keps = Real(1) / std::sqrt(p.det);
  const auto mk = m_plus<Real>(Complex<Real>(E, keps), v, alpha, theta, opt);
  out.kkl_eps = static_cast<double>(keps);
  out.kkl_value = static_cast<double>(psi(mk.value) / (keps * p.norm()));
  out.kkl_inside = out.kkl_value > 1.0 / kKKLConstant && out.kkl_value < kKKLConstant;
  return out;
}

}  // namespace quasispec
