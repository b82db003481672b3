#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "quasispec/errors.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/weyl.hpp"

namespace quasispec {

/// w = 2 eps Im M(E + i eps), an upper bound for mu(E - eps, E + eps) where
/// mu = mu^{e_0} + mu^{e_1} at base phase theta.
template <typename Real>
Real smoothed_window(Real E, Real eps, const Potential& v, Real alpha, Real theta, const MOptions& opt = {}) {
  require(eps > Real(0), "window half-width must be positive");
  const auto t = m_triple<Real>(Complex<Real>(E, eps), v, alpha, theta, opt);
  return Real(2) * eps * t.M.imag();
}

struct LadderPoint {
  double eps = 0;
  double w = 0;
  double im_M = 0;
};

struct HolderFit {
  double E = 0;
  std::vector<LadderPoint> ladder;
  double slope = 0;      // least squares of ln w against ln eps
  double residual = 0;   // RMS of the log fit
  std::pair<double, double> window{0, 0};
  double min_lower = 0;  // min over the ladder of Im M / eps^{1/2}
  double max_upper = 0;  // max over the ladder of Im M * eps^{1/2}
};

/// Geometric ladder of `points` values of eps between eps_min and eps_max.
inline std::vector<double> geometric_ladder(double lo, double hi, int points) {
  require(lo > 0 && hi > lo && points >= 2, "bad ladder specification");
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / double(points - 1)));
  return out;
}

/// Slope and RMS residual of the least-squares line through (x_i, y_i).
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

template <typename Real>
HolderFit holder_fit(Real E, const Potential& v, Real alpha, Real theta, std::pair<double, double> eps_range,
                     int points, const MOptions& opt = {}) {
  require(points >= 4, "holder fit needs at least 4 ladder points");
  HolderFit fit;
  fit.E = static_cast<double>(E);
  fit.window = eps_range;
  std::vector<double> lx, ly;
  fit.min_lower = INFINITY;
  fit.max_upper = 0;
  for (double eps : geometric_ladder(eps_range.first, eps_range.second, points)) {
    const auto t = m_triple<Real>(Complex<Real>(E, Real(eps)), v, alpha, theta, opt);
    const double im = static_cast<double>(t.M.imag());
    const double w = 2.0 * eps * im;
    fit.ladder.push_back({eps, w, im});
    lx.push_back(std::log(eps));
    ly.push_back(std::log(w));
    fit.min_lower = std::min(fit.min_lower, im / std::sqrt(eps));
    fit.max_upper = std::max(fit.max_upper, im * std::sqrt(eps));
  }
  std::tie(fit.slope, fit.residual) = fit_line(lx, ly);
  return fit;
}

/// Upper proxy for mu^f(J): (sum_k |f(k)| w_k^{1/2})^2 with w_k the smoothed
/// window at phase theta + k alpha, using mu^{e_k}_theta = mu^{e_0}_{theta + k alpha}.
template <typename Real>
Real l1_window_bound(const std::map<int, std::complex<double>>& f, std::pair<Real, Real> J, const Potential& v,
                     Real alpha, Real theta, const MOptions& opt = {}) {
  require(J.second > J.first, "interval must have positive length");
  require(!f.empty(), "f must have finite nonempty support");
  const Real E = (J.first + J.second) / Real(2);
  const Real eps = (J.second - J.first) / Real(2);
  Real acc = 0;
  for (const auto& [k, fk] : f) {
    if (fk == std::complex<double>{}) continue;
    const Real w = smoothed_window<Real>(E, eps, v, alpha, theta + Real(k) * alpha, opt);
    acc += Real(std::abs(fk)) * std::sqrt(w);
  }
  return acc * acc;
}

enum class IdsMethod { FiniteBox, PhaseAverage };

struct IdsTable {
  std::vector<double> energies;
  std::vector<double> N_values;
  IdsMethod method = IdsMethod::FiniteBox;
  int size = 0;  // box size (finite_box) or phase count (phase_average)
};

/// Number of eigenvalues below E of the n x n Dirichlet truncation with
/// diagonal v(theta + j alpha), j = 1..n (Sturm sequence count).
std::int64_t eigenvalue_count(const Potential& v, double alpha, double theta, int n, double E);

/// Same count with a precomputed diagonal.
std::int64_t eigenvalue_count(const std::vector<double>& diagonal, double E);

std::vector<double> box_diagonal(const Potential& v, double alpha, double theta, int n);

struct IdsOptions {
  double theta = 0;
  int phase_box = 256;  // box used per phase by the phase-average method
};

/// Integrated density of states on a sorted energy grid. finite_box counts
/// eigenvalues of a size x size box at fixed theta; phase_average averages
/// the e_0 spectral distribution of a centred box over `size` phases.
IdsTable ids(const Potential& v, double alpha, const std::vector<double>& E_grid, IdsMethod method, int size,
             const IdsOptions& opt = {});

/// Energy grid covering [-(2 + |v|_0) - 1, (2 + |v|_0) + 1] with spacing `step`.
std::vector<double> spectrum_grid(const Potential& v, double step);

struct ThoulessResult {
  double integral = 0;
  double residual = 0;
};

/// int ln|E' - E| dN(E') with N piecewise linear between table points; each
/// cell is integrated exactly, including the logarithmic singularity.
ThoulessResult thouless_check(double E, const IdsTable& table, double lyap_value);

struct Gap {
  double E_left = 0;
  double E_right = 0;
  double N_plateau = 0;
};

/// Maximal runs of at least three grid points where N stays constant within
/// plateau_tol, excluding the N = 0 and N = 1 plateaus outside the spectrum.
std::vector<Gap> gap_edges(const IdsTable& table, double plateau_tol);

/// Sharpens a tabulated gap to the band edges of a large Dirichlet box.
/// Boundary states inside the gap are isolated eigenvalues; the edges are
/// the innermost eigenvalues that still belong to a tightly spaced band.
Gap refine_gap(const Potential& v, double alpha, double theta, const Gap& gap, int box = 20000);

/// E is treated as in the spectrum when the box count grows across
/// [E - delta, E + delta] by more than the two boundary states a Dirichlet
/// box can place in a gap.
bool in_spectrum(const Potential& v, double alpha, double theta, double E, double delta, int box = 5000);

/// Gap label check: ||N - k alpha|| minimised over |k| <= k_max.
std::pair<int, double> nearest_gap_label(double N, double alpha, int k_max);

std::string to_string(IdsMethod m);

}  // namespace quasispec
