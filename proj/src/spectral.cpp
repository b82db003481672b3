#include "quasispec/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "quasispec/arithmetic.hpp"

namespace quasispec {

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two points");
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0, "line fit needs distinct abscissae");
  const double slope = sxy / sxx;
  double ss = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    ss += r * r;
  }
  return {slope, std::sqrt(ss / n)};
}

std::vector<double> box_diagonal(const Potential& v, double alpha, double theta, int n) {
  std::vector<double> d(n);
  // long double phase accumulation keeps the orbit exact over long boxes
  for (int j = 0; j < n; ++j) {
    const long double x = (long double)theta + (long double)(j + 1) * (long double)alpha;
    d[j] = v(double(x - std::floor(x)));
  }
  return d;
}

std::int64_t eigenvalue_count(const std::vector<double>& diagonal, double E) {
  // LDL^T pivots of H - E with unit off-diagonals; negatives count eigenvalues below E
  constexpr double tiny = 1e-300;
  std::int64_t count = 0;
  double q = 1;
  for (size_t j = 0; j < diagonal.size(); ++j) {
    q = (diagonal[j] - E) - (j == 0 ? 0.0 : 1.0 / q);
    if (q == 0) q = -tiny;
    if (q < 0) ++count;
  }
  return count;
}

std::int64_t eigenvalue_count(const Potential& v, double alpha, double theta, int n, double E) {
  return eigenvalue_count(box_diagonal(v, alpha, theta, n), E);
}

std::vector<double> spectrum_grid(const Potential& v, double step) {
  require(step > 0, "grid step must be positive");
  const double a = 3.0 + v.sup_bound();
  const auto n = static_cast<std::int64_t>(std::ceil(2 * a / step));
  std::vector<double> out(n + 1);
  for (std::int64_t i = 0; i <= n; ++i) out[i] = -a + double(i) * (2 * a / double(n));
  return out;
}

namespace {

IdsTable ids_finite_box(const Potential& v, double alpha, const std::vector<double>& E_grid, int size,
                        double theta) {
  IdsTable t;
  t.energies = E_grid;
  t.method = IdsMethod::FiniteBox;
  t.size = size;
  const auto diag = box_diagonal(v, alpha, theta, size);
  t.N_values.reserve(E_grid.size());
  // eigenvalues <= E: count below the next representable energy
  for (double E : E_grid)
    t.N_values.push_back(double(eigenvalue_count(diag, std::nextafter(E, INFINITY))) / double(size));
  return t;
}

IdsTable ids_phase_average(const Potential& v, double alpha, const std::vector<double>& E_grid, int phases,
                           int box) {
  require(box >= 16, "phase-average box must have at least 16 sites");
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(size_t(phases) * size_t(box));
  const int centre = box / 2;
  Eigen::VectorXd diag(box);
  Eigen::VectorXd sub = Eigen::VectorXd::Ones(box - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (int p = 0; p < phases; ++p) {
    const long double theta = (long double)p / (long double)phases;
    for (int j = 0; j < box; ++j) {
      const long double x = theta + (long double)(j - centre) * (long double)alpha;
      diag[j] = v(double(x - std::floor(x)));
    }
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    for (int i = 0; i < box; ++i) atoms.emplace_back(vals[i], vecs(centre, i) * vecs(centre, i) / double(phases));
  }
  std::sort(atoms.begin(), atoms.end());
  IdsTable t;
  t.energies = E_grid;
  t.method = IdsMethod::PhaseAverage;
  t.size = phases;
  double acc = 0;
  size_t a = 0;
  for (double E : E_grid) {
    while (a < atoms.size() && atoms[a].first <= E) acc += atoms[a++].second;
    t.N_values.push_back(std::clamp(acc, 0.0, 1.0));
  }
  return t;
}

}  // namespace

IdsTable ids(const Potential& v, double alpha, const std::vector<double>& E_grid, IdsMethod method, int size,
             const IdsOptions& opt) {
  require(!E_grid.empty() && std::is_sorted(E_grid.begin(), E_grid.end()), "energy grid must be sorted");
  if (method == IdsMethod::FiniteBox) {
    require(size >= 100, "ids box size must be at least 100");
    return ids_finite_box(v, alpha, E_grid, size, opt.theta);
  }
  require(size >= 1, "phase count must be positive");
  return ids_phase_average(v, alpha, E_grid, size, opt.phase_box);
}

ThoulessResult thouless_check(double E, const IdsTable& table, double lyap_value) {
  require(table.energies.size() >= 2, "ids table too short");
  const auto F = [](double t) { return t == 0 ? 0.0 : t * std::log(std::abs(t)) - t; };
  double total = 0;
  for (size_t i = 0; i + 1 < table.energies.size(); ++i) {
    const double dN = table.N_values[i + 1] - table.N_values[i];
    if (dN == 0) continue;
    const double a = table.energies[i], b = table.energies[i + 1];
    total += dN / (b - a) * (F(b - E) - F(a - E));
  }
  return {total, std::abs(total - lyap_value)};
}

std::vector<Gap> gap_edges(const IdsTable& table, double plateau_tol) {
  require(plateau_tol > 0, "plateau tolerance must be positive");
  const auto& N = table.N_values;
  struct Run {
    size_t first, last;
    double level;
  };
  std::vector<Run> runs;
  for (size_t i = 0; i < N.size();) {
    size_t j = i;
    double lo = N[i], hi = N[i];
    while (j + 1 < N.size() && std::max(hi, N[j + 1]) - std::min(lo, N[j + 1]) <= plateau_tol) {
      ++j;
      lo = std::min(lo, N[j]);
      hi = std::max(hi, N[j]);
    }
    runs.push_back({i, j, 0.5 * (lo + hi)});
    i = j + 1;
  }
  // A Dirichlet box can put one boundary state per end inside a gap, which
  // splits the plateau; rejoin neighbours whose levels differ by at most two
  // such states in total. Phase-averaged tables have no boundary states.
  const double slack = table.method == IdsMethod::FiniteBox ? 2.0 / table.size + plateau_tol : 0.0;
  std::vector<Gap> gaps;
  size_t covered_until = 0;
  for (size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].last - runs[r].first + 1 < 3) continue;
    if (!gaps.empty() && runs[r].first <= covered_until) continue;
    size_t a = r, b = r;
    double lo = runs[r].level, hi = runs[r].level;
    const auto fits = [&](const Run& q) { return std::max(hi, q.level) - std::min(lo, q.level) <= slack; };
    while (a > 0 && fits(runs[a - 1])) {
      --a;
      lo = std::min(lo, runs[a].level), hi = std::max(hi, runs[a].level);
    }
    while (b + 1 < runs.size() && fits(runs[b + 1])) {
      ++b;
      lo = std::min(lo, runs[b].level), hi = std::max(hi, runs[b].level);
    }
    const double level = runs[r].level;
    covered_until = runs[b].last;
    if (level <= plateau_tol || level >= 1 - plateau_tol) continue;
    if (!gaps.empty() && gaps.back().E_right >= table.energies[runs[a].first]) continue;
    gaps.push_back({table.energies[runs[a].first], table.energies[runs[b].last], level});
  }
  return gaps;
}

namespace {

// m-th smallest eigenvalue (0-based) by bisection on the Sturm count.
double kth_eigenvalue(const std::vector<double>& diag, std::int64_t m, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eigenvalue_count(diag, mid) >= m + 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Gap refine_gap(const Potential& v, double alpha, double theta, const Gap& gap, int box) {
  require(box >= 100 && gap.E_right > gap.E_left, "refine_gap needs a gap and box >= 100");
  const auto diag = box_diagonal(v, alpha, theta, box);
  const double bound = 3.0 + v.sup_bound();
  const double mid = 0.5 * (gap.E_left + gap.E_right);
  const std::int64_t c = eigenvalue_count(diag, mid);
  constexpr int span = 6;
  const std::int64_t m0 = std::max<std::int64_t>(0, c - span), m1 = std::min<std::int64_t>(box - 1, c + span - 1);
  std::vector<double> lam;
  for (std::int64_t m = m0; m <= m1; ++m) lam.push_back(kth_eigenvalue(diag, m, -bound, bound));
  const double width = gap.E_right - gap.E_left;
  Gap out = gap;
  // Near a square-root edge E_j ~ e - C j^2, so spacings grow going into the
  // band. An isolated boundary state breaks that pattern.
  const size_t below = size_t(c - m0);  // lam[below] is the first eigenvalue above mid
  for (size_t i = below; i-- > 2;) {
    const double s1 = lam[i] - lam[i - 1], s2 = lam[i - 1] - lam[i - 2];
    if (s1 <= s2 && s1 < 0.05 * width) {
      out.E_left = lam[i];
      break;
    }
  }
  for (size_t i = below; i + 2 < lam.size(); ++i) {
    const double s1 = lam[i + 1] - lam[i], s2 = lam[i + 2] - lam[i + 1];
    if (s1 <= s2 && s1 < 0.05 * width) {
      out.E_right = lam[i];
      break;
    }
  }
  return out;
}

bool in_spectrum(const Potential& v, double alpha, double theta, double E, double delta, int box) {
  require(delta > 0, "delta must be positive");
  const auto diag = box_diagonal(v, alpha, theta, box);
  return eigenvalue_count(diag, E + delta) - eigenvalue_count(diag, E - delta) > 2;
}

std::pair<int, double> nearest_gap_label(double N, double alpha, int k_max) {
  int best_k = 0;
  double best = INFINITY;
  for (int k = -k_max; k <= k_max; ++k) {
    const double d = double(torus_norm<long double>((long double)N - (long double)k * alpha));
    if (d < best - 1e-15) best = d, best_k = k;
  }
  return {best_k, best};
}

std::string to_string(IdsMethod m) { return m == IdsMethod::FiniteBox ? "finite_box" : "phase_average"; }

}  // namespace quasispec
