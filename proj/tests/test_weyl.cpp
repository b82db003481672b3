#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "quasispec/cocycle.hpp"
#include "quasispec/weyl.hpp"

using namespace quasispec;
using cd = std::complex<double>;

namespace {

const double kGolden = 0.6180339887498949;

double site(const Potential& v, double theta, long n) {
  double x = theta + double(n) * kGolden;
  x -= std::floor(x);
  return v(x);
}

// Half-line box 1..N with u_0 = 1 moved to the right-hand side: m+ = -u_1.
cd m_plus_box(cd z, const Potential& v, double theta, int N) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    H(i, i) = site(v, theta, i + 1) - z;
    if (i + 1 < N) H(i, i + 1) = H(i + 1, i) = 1.0;
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(N);
  rhs(0) = -1.0;
  return -H.partialPivLu().solve(rhs)(0);
}

// Sites -N+1..0 with u_1 = 1 on the right-hand side: m- = u_1/u_0 = 1/u_0.
cd m_minus_box(cd z, const Potential& v, double theta, int N) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(N, N);
  for (int i = 0; i < N; ++i) {  // row i is site -i
    H(i, i) = site(v, theta, -i) - z;
    if (i + 1 < N) H(i, i + 1) = H(i + 1, i) = 1.0;
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(N);
  rhs(0) = -1.0;
  return 1.0 / H.partialPivLu().solve(rhs)(0);
}

}  // namespace

TEST_CASE("m+ and m- agree with finite-box linear solves") {
  const Potential v = Potential::amo(0.7);
  for (cd z : {cd(0.3, 0.5), cd(-1.2, 0.25), cd(2.5, 1.0)}) {
    for (double theta : {0.0, 0.37}) {
      const auto t = m_triple<double>(z, v, kGolden, theta, {1e-13});
      const cd mp = m_plus_box(z, v, theta, 400), mm = m_minus_box(z, v, theta, 400);
      CHECK(std::abs(t.m_plus.value() - mp) < 1e-10);
      CHECK(std::abs(t.m_minus.value() - mm) < 1e-10);
      CHECK(std::abs(t.M.value() - (mp * mm - 1.0) / (mp + mm)) < 1e-9);
      CHECK(t.m_plus.imag() > 0);
      CHECK(t.m_minus.imag() > 0);
      CHECK(t.M.imag() > 0);
    }
  }
}

TEST_CASE("free m-functions have closed forms") {
  const Potential z0 = Potential::zero();
  const auto t = m_triple<double>(cd(0, 1), z0, kGolden, 0.0, {1e-14});
  const double g = (std::sqrt(5.0) - 1) / 2;
  CHECK(std::abs(t.m_plus.value() - cd(0, g)) < 1e-12);
  CHECK(std::abs(t.m_minus.value() - cd(0, 1 + g)) < 1e-12);
  CHECK(std::abs(t.M.value() - cd(0, 2 / std::sqrt(5.0))) < 1e-12);
  // m^2 + z m + 1 = 0 off the axis
  const cd z(0.8, 0.1);
  const cd mp = m_plus<double>(z, z0, kGolden, 0.0, {1e-13}).value.value();
  CHECK(std::abs(mp * mp + z * mp + 1.0) < 1e-10);
}

TEST_CASE("extended precision agrees with double") {
  const Potential v = Potential::amo(0.5);
  const auto a = m_plus<double>(cd(0.1, 0.2), v, kGolden, 0.0, {1e-12});
  const auto b = m_plus<long double>({0.1L, 0.2L}, v, (long double)kGolden, 0.0L, {1e-12});
  CHECK(std::abs(a.value.value() - cd(b.value.value())) < 1e-10);
}

TEST_CASE("psi is the sup of the rotated values") {
  const HalfPlanePoint<double> z(cd(0.4, 0.3));
  double best = 0;
  for (int i = 0; i < 20000; ++i) best = std::max(best, std::abs(rotate_beta(z, M_PI * i / 20000.0)));
  CHECK(psi(z) == doctest::Approx(best).epsilon(1e-6));
  CHECK(phi(z) >= 1.0);
}

TEST_CASE("no convergence is reported") {
  MOptions opt{1e-10, 1000, 64};
  CHECK_THROWS_AS(m_plus<double>(cd(0, 1e-6), Potential::amo(0.5), kGolden, 0.0, opt), NoConvergence);
  CHECK_THROWS_AS(m_plus<double>(cd(0, 0), Potential::amo(0.5), kGolden, 0.0), PreconditionError);
}

TEST_CASE("transfer matrices are unimodular and match the free closed form") {
  const Potential v = Potential::amo(1.3);
  const auto t = iterate<double>(cd(0.4, 0), v, kGolden, 0.2, 8);
  CHECK(std::abs(t.determinant() - 1.0) < 1e-9);
  // free: tr A_n(2 cos k) = 2 cos(n k)
  const double k = 0.9;
  const auto f = iterate<double>(cd(2 * std::cos(k), 0), Potential::zero(), kGolden, 0.0, 37);
  CHECK(f.value().trace().real() == doctest::Approx(2 * std::cos(37 * k)).epsilon(1e-10));
  // A_{-n} inverts A_n after shifting the base point; the shifted phases
  // differ in the last bit, amplified by ||A_n||^2
  const auto fw = iterate<double>(cd(0.4, 0), v, kGolden, 0.2, 20);
  const auto bw = iterate<double>(cd(0.4, 0), v, kGolden, 0.2 + 20 * kGolden, -20);
  const double nn = std::exp(2 * fw.log_norm());
  CHECK((bw.value() * fw.value() - Mat2<double>::Identity()).norm() < 1e-13 * 20 * nn);
}

TEST_CASE("free Lyapunov exponent") {
  CHECK(lyapunov<double>(2.5, Potential::zero(), kGolden, 20000, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  CHECK(std::abs(lyapunov<double>(1.0, Potential::zero(), kGolden, 20000, 1)) < 1e-3);
  // supercritical AMO: L = ln lambda on the spectrum
  CHECK(lyapunov<double>(0.0, Potential::amo(2.0), kGolden, 20000, 8) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-2));
}

TEST_CASE("solutions satisfy the eigenvalue equation") {
  const auto u = solution<double>(0.3, cd(0.2, 0), Potential::amo(0.5), kGolden, 0.1, 100);
  CHECK(u.recurrence_residual(Potential::amo(0.5), kGolden) < 1e-12);
  CHECK(std::norm(u.values[0]) + std::norm(u.values[1]) == doctest::Approx(1.0));
}

TEST_CASE("M combination: fixed values and the phi identity") {
  using H = HalfPlanePoint<double>;
  CHECK(std::abs(M_function(H(cd(0, 1)), H(cd(0, 1))).value() - cd(0, 1)) < 1e-15);
  CHECK(std::abs(M_function(H(cd(0, 2)), H(cd(0, 1))).value() - cd(0, 1)) < 1e-15);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> re(-3, 3), im(0.01, 3);
  for (int i = 0; i < 200; ++i) {
    const H a(cd(re(rng), im(rng))), b(cd(re(rng), im(rng)));
    const H m = M_function(a, b);
    CHECK(std::abs(phi(m) - (phi(a) * phi(b) + 1) / (phi(a) + phi(b))) < 1e-12 * phi(m));
    CHECK(phi(m) <= std::min(phi(a), phi(b)) * (1 + 1e-12));
  }
}

TEST_CASE("m- is the m+ of the reflected potential, read through -1/l") {
  // reflection identity, checked independently of the box solves above
  const Potential v = Potential::trig_poly({{1, {0.4, 0.3}}, {2, {0.0, -0.2}}});
  const cd z(0.5, 0.3);
  const double theta = 0.21;
  const cd mm = m_minus<double>(z, v, kGolden, theta, {1e-13}).value.value();
  CHECK(std::abs(mm - m_minus_box(z, v, theta, 400)) < 1e-10);
  CHECK(mm.imag() > 0);
}
