#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "quasispec/spectral.hpp"

using namespace quasispec;

namespace {
const double kGolden = 0.6180339887498949;
}

TEST_CASE("Sturm count matches the free Dirichlet eigenvalues") {
  const int n = 101;
  for (double E : {-2.5, -1.3, 0.05, 0.9, 1.99, 2.5}) {
    std::int64_t expect = 0;
    for (int j = 1; j <= n; ++j) expect += 2 * std::cos(M_PI * j / (n + 1)) < E;
    CHECK(eigenvalue_count(Potential::zero(), kGolden, 0.0, n, E) == expect);
  }
}

TEST_CASE("Sturm count matches a dense eigensolver for AMO") {
  const int n = 60;
  const auto d = box_diagonal(Potential::amo(1.2), kGolden, 0.3, n);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    H(i, i) = d[i];
    if (i + 1 < n) H(i, i + 1) = H(i + 1, i) = 1;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  for (double E : {-3.0, -1.0, 0.2, 1.7, 3.1}) {
    std::int64_t expect = (es.eigenvalues().array() < E).count();
    CHECK(eigenvalue_count(d, E) == expect);
  }
}

TEST_CASE("free IDS is 1 - arccos(E/2)/pi") {
  const std::vector<double> grid{-1.5, -0.5, 0.0, 1.0, 1.8};
  for (auto method : {IdsMethod::FiniteBox, IdsMethod::PhaseAverage}) {
    const auto t = ids(Potential::zero(), kGolden, grid, method, method == IdsMethod::FiniteBox ? 2000 : 16);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(t.N_values[i] == doctest::Approx(1 - std::acos(grid[i] / 2) / M_PI).epsilon(0.01));
  }
}

TEST_CASE("the two IDS methods agree on AMO") {
  const Potential v = Potential::amo(0.8);
  std::vector<double> grid;
  for (double E = -3.5; E <= 3.5; E += 0.25) grid.push_back(E);
  const auto a = ids(v, kGolden, grid, IdsMethod::FiniteBox, 4000);
  const auto b = ids(v, kGolden, grid, IdsMethod::PhaseAverage, 32);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(a.N_values[i] - b.N_values[i]) < 0.01);
}

TEST_CASE("Thouless integral reproduces the free Lyapunov exponent") {
  const auto t = ids(Potential::zero(), kGolden, spectrum_grid(Potential::zero(), 1e-3), IdsMethod::FiniteBox, 4000);
  for (double E : {3.0, -2.5, 0.4}) {
    const double L = std::abs(E) > 2 ? std::acosh(std::abs(E) / 2) : 0.0;
    CHECK(thouless_check(E, t, L).residual < 0.01);
  }
}

TEST_CASE("no gaps for the free operator, labelled gaps for AMO") {
  const auto tz = ids(Potential::zero(), kGolden, spectrum_grid(Potential::zero(), 1e-2), IdsMethod::FiniteBox, 3000);
  CHECK(gap_edges(tz, 0.5 / 3000).empty());

  const Potential v = Potential::amo(0.5);
  const auto t = ids(v, kGolden, spectrum_grid(v, 2e-3), IdsMethod::FiniteBox, 3000);
  const auto gaps = gap_edges(t, 0.5 / 3000);
  REQUIRE(gaps.size() >= 2);
  for (const auto& g : gaps) {
    const auto [k, dist] = nearest_gap_label(g.N_plateau, kGolden, 30);
    CHECK(dist < 2e-3);
    CHECK(k != 0);
  }
  // the two widest gaps carry the labels +-1
  auto widest = gaps[0];
  for (const auto& g : gaps)
    if (g.E_right - g.E_left > widest.E_right - widest.E_left) widest = g;
  CHECK(std::abs(nearest_gap_label(widest.N_plateau, kGolden, 30).first) == 1);
  const auto r = refine_gap(v, kGolden, 0.0, widest);
  CHECK(r.E_left <= widest.E_left + 2e-3);
  CHECK(r.E_right >= widest.E_right - 2e-3);
  CHECK(!in_spectrum(v, kGolden, 0.0, 0.5 * (r.E_left + r.E_right), 1e-3));
  CHECK(in_spectrum(v, kGolden, 0.0, r.E_left - 5e-3, 1e-3));
}

TEST_CASE("gap label search") {
  double N = 3 * kGolden;
  N -= std::floor(N);
  const auto [k, d] = nearest_gap_label(N, kGolden, 10);
  CHECK(k == 3);
  CHECK(d < 1e-12);
}

TEST_CASE("in_spectrum on the free operator") {
  CHECK(in_spectrum(Potential::zero(), kGolden, 0.0, 0.0, 1e-2));
  CHECK(!in_spectrum(Potential::zero(), kGolden, 0.0, 2.3, 1e-2));
}

TEST_CASE("window ladders: free slopes and monotone Im M / eps") {
  const auto f0 = holder_fit<double>(0.0, Potential::zero(), kGolden, 0.0, {1e-4, 1e-1}, 12);
  const auto f2 = holder_fit<double>(2.0, Potential::zero(), kGolden, 0.0, {1e-4, 1e-1}, 12);
  CHECK(f0.slope == doctest::Approx(1.0).epsilon(0.05));
  CHECK(f2.slope == doctest::Approx(0.5).epsilon(0.1));
  for (const auto& fit : {f0, f2})
    for (std::size_t i = 1; i < fit.ladder.size(); ++i)
      CHECK(fit.ladder[i].im_M / fit.ladder[i].eps <= fit.ladder[i - 1].im_M / fit.ladder[i - 1].eps);
}

TEST_CASE("l1 window bound reduces to the window for a single site") {
  const Potential v = Potential::amo(0.5);
  const double w = smoothed_window<double>(0.1, 0.01, v, kGolden, 0.0);
  CHECK(l1_window_bound<double>({{0, 1.0}}, {0.09, 0.11}, v, kGolden, 0.0) == doctest::Approx(w));
  const double w3 = smoothed_window<double>(0.1, 0.01, v, kGolden, 3 * kGolden);
  CHECK(l1_window_bound<double>({{0, 1.0}, {3, {0, 2.0}}}, {0.09, 0.11}, v, kGolden, 0.0) ==
        doctest::Approx(std::pow(std::sqrt(w) + 2 * std::sqrt(w3), 2)));
}
