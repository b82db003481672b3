#include "quasispec/conjugation.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "quasispec/arithmetic.hpp"

namespace quasispec {

namespace {

constexpr double kTwoPi = two_pi<double>;

cplx cis(double phase) { return std::polar(1.0, phase); }

// e^{i phi} - 1 without cancellation.
cplx expm1_i(double phi) { return cplx(0, 2 * std::sin(phi / 2)) * cis(phi / 2); }

std::vector<cplx> inverse_dft(const std::vector<cplx>& spectrum) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<cplx> out;
  fft.inv(out, spectrum);
  return out;
}

std::vector<cplx> forward_dft(const std::vector<cplx>& values) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out;
  fft.fwd(out, values);
  return out;
}

double matrix_norm(const CMat2& m) { return operator_norm<double>(m); }

}  // namespace

int fft_size_for(int n) {
  int M = 8;
  while (M < n) M *= 2;
  return M;
}

// ---------------------------------------------------------------- BandFunction

BandFunction::BandFunction(Coefficients coeffs, double band) : band_(band) {
  require(band >= 0, "band must be non-negative");
  for (auto& [k, c] : coeffs)
    if (c != cplx{}) coeffs_.emplace(k, c);
}

BandFunction BandFunction::constant(cplx c, double band) { return BandFunction({{0, c}}, band); }

BandFunction BandFunction::from_potential(const Potential& v, double band) {
  return BandFunction(Coefficients(v.coefficients().begin(), v.coefficients().end()), band);
}

BandFunction BandFunction::from_samples(const std::vector<cplx>& values, double band, double drop_rel) {
  const int M = int(values.size());
  require(M >= 4 && M % 2 == 0, "sample count must be even");
  const auto F = forward_dft(values);
  // Roundoff from the transform and from whatever produced the samples
  // shows up as a flat tail; the weight e^{2 pi band |k|} would amplify it.
  // Callers size M at >= 4x the support, so the top quarter of the
  // frequencies measures that noise level.
  double l1 = 0, tail = 0;
  for (int j = 0; j < M; ++j) {
    const double a = std::abs(F[j]) / double(M);
    l1 += a;
    const int k = std::abs(j < M / 2 ? j : j - M);
    if (4 * k >= 3 * (M / 2)) tail = std::max(tail, a);
  }
  const double floor = std::max(16 * std::numeric_limits<double>::epsilon() * std::log2(double(M)) * l1, 8 * tail);
  Coefficients c;
  for (int j = 0; j < M; ++j) {
    if (j == M / 2) continue;
    const int k = j < M / 2 ? j : j - M;
    const cplx f = F[j] / double(M);
    if (std::abs(f) > floor) c[k] = f;
  }
  return BandFunction(std::move(c), band).truncated(drop_rel);
}

int BandFunction::degree() const {
  int d = 0;
  for (const auto& [k, c] : coeffs_) d = std::max(d, std::abs(k));
  return d;
}

cplx BandFunction::operator()(cplx x) const {
  cplx acc = 0;
  for (const auto& [k, c] : coeffs_) acc += c * std::exp(cplx(0, kTwoPi * k) * x);
  return acc;
}

std::vector<cplx> BandFunction::samples(int M) const {
  require(M >= 2 * degree() + 2, "sample grid too coarse for the support");
  std::vector<cplx> F(M, cplx{});
  for (const auto& [k, c] : coeffs_) F[((k % M) + M) % M] += c;
  return inverse_dft(F);
}

double BandFunction::norm() const {
  double acc = 0;
  for (const auto& [k, c] : coeffs_) acc += std::abs(c) * std::exp(kTwoPi * band_ * std::abs(k));
  return acc;
}

double BandFunction::sup_on_grid(int M) const {
  double s = 0;
  for (const auto& z : samples(fft_size_for(std::max(M, 2 * degree() + 2)))) s = std::max(s, std::abs(z));
  return s;
}

double BandFunction::reality_defect() const {
  double d = 0;
  for (const auto& [k, c] : coeffs_) {
    auto it = coeffs_.find(-k);
    const cplx mirror = it == coeffs_.end() ? cplx{} : it->second;
    d = std::max(d, std::abs(c - std::conj(mirror)));
  }
  const double n = norm();
  return n > 0 ? d / n : 0.0;
}

BandFunction BandFunction::shifted(double a) const {
  Coefficients c;
  for (const auto& [k, f] : coeffs_) {
    const long double ph = (long double)k * (long double)a;
    c[k] = f * cis(kTwoPi * double(ph - std::floor(ph)));
  }
  return BandFunction(std::move(c), band_);
}

BandFunction BandFunction::truncated(double rel) const {
  const double cut = rel * norm();
  Coefficients c;
  for (const auto& [k, f] : coeffs_)
    if (std::abs(f) * std::exp(kTwoPi * band_ * std::abs(k)) >= cut) c[k] = f;
  return BandFunction(std::move(c), band_);
}

BandFunction BandFunction::operator+(const BandFunction& o) const {
  Coefficients c = coeffs_;
  for (const auto& [k, f] : o.coeffs_) c[k] += f;
  return BandFunction(std::move(c), std::min(band_, o.band_));
}

BandFunction BandFunction::operator-(const BandFunction& o) const { return *this + (-o); }

BandFunction BandFunction::operator*(const BandFunction& o) const {
  Coefficients c;
  for (const auto& [k, f] : coeffs_)
    for (const auto& [l, g] : o.coeffs_) c[k + l] += f * g;
  return BandFunction(std::move(c), std::min(band_, o.band_));
}

BandFunction BandFunction::operator*(cplx s) const {
  Coefficients c;
  for (const auto& [k, f] : coeffs_) c[k] = f * s;
  return BandFunction(std::move(c), band_);
}

// ----------------------------------------------------------------- MatFunction

MatFunction::MatFunction(std::array<BandFunction, 4> entries, double band) : e_(std::move(entries)), band_(band) {}

MatFunction MatFunction::constant(const CMat2& m, double band) {
  return MatFunction({BandFunction::constant(m(0, 0), band), BandFunction::constant(m(0, 1), band),
                      BandFunction::constant(m(1, 0), band), BandFunction::constant(m(1, 1), band)},
                     band);
}

MatFunction MatFunction::from_samples(const std::vector<CMat2>& values, double band, double drop_rel) {
  std::array<BandFunction, 4> e;
  std::vector<cplx> s(values.size());
  for (int idx = 0; idx < 4; ++idx) {
    for (size_t j = 0; j < values.size(); ++j) s[j] = values[j](idx / 2, idx % 2);
    e[idx] = BandFunction::from_samples(s, band, drop_rel);
  }
  return MatFunction(std::move(e), band);
}

int MatFunction::degree() const {
  int d = 0;
  for (const auto& f : e_) d = std::max(d, f.degree());
  return d;
}

CMat2 MatFunction::operator()(cplx x) const {
  CMat2 m;
  m << e_[0](x), e_[1](x), e_[2](x), e_[3](x);
  return m;
}

std::vector<CMat2> MatFunction::samples(int M) const {
  std::array<std::vector<cplx>, 4> s;
  for (int idx = 0; idx < 4; ++idx) s[idx] = e_[idx].samples(M);
  std::vector<CMat2> out(M);
  for (int j = 0; j < M; ++j) out[j] << s[0][j], s[1][j], s[2][j], s[3][j];
  return out;
}

double MatFunction::norm() const {
  return std::max(e_[0].norm() + e_[1].norm(), e_[2].norm() + e_[3].norm());
}

double MatFunction::sup_on_grid(int M) const {
  double s = 0;
  for (const auto& m : samples(fft_size_for(std::max(M, 2 * degree() + 2)))) s = std::max(s, matrix_norm(m));
  return s;
}

double MatFunction::det_defect(int M) const {
  double s = 0;
  for (const auto& m : samples(fft_size_for(std::max(M, 2 * degree() + 2))))
    s = std::max(s, std::abs(m.determinant() - 1.0));
  return s;
}

MatFunction MatFunction::shifted(double a) const {
  return MatFunction({e_[0].shifted(a), e_[1].shifted(a), e_[2].shifted(a), e_[3].shifted(a)}, band_);
}

MatFunction MatFunction::truncated(double rel) const {
  const double cut = rel * norm();
  std::array<BandFunction, 4> e;
  for (int i = 0; i < 4; ++i) {
    BandFunction::Coefficients c;
    for (const auto& [k, f] : e_[i].coeffs())
      if (std::abs(f) * std::exp(kTwoPi * band_ * std::abs(k)) >= cut) c[k] = f;
    e[i] = BandFunction(std::move(c), band_);
  }
  return MatFunction(std::move(e), band_);
}

MatFunction MatFunction::operator*(const MatFunction& o) const {
  const auto& a = e_;
  const auto& b = o.e_;
  return MatFunction({a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
                      a[2] * b[1] + a[3] * b[3]},
                     std::min(band_, o.band_));
}

MatFunction MatFunction::operator+(const MatFunction& o) const {
  return MatFunction({e_[0] + o.e_[0], e_[1] + o.e_[1], e_[2] + o.e_[2], e_[3] + o.e_[3]}, std::min(band_, o.band_));
}

MatFunction MatFunction::operator-(const MatFunction& o) const {
  return MatFunction({e_[0] - o.e_[0], e_[1] - o.e_[1], e_[2] - o.e_[2], e_[3] - o.e_[3]}, std::min(band_, o.band_));
}

// -------------------------------------------------------------- exp and log

namespace {

// sinh(s) / s
cplx sinhc(cplx s) {
  if (std::abs(s) < 1e-4) return 1.0 + s * s / 6.0 + s * s * s * s / 120.0;
  return std::sinh(s) / s;
}

}  // namespace

CMat2 matrix_exp(const CMat2& w) {
  const cplx tau = w.trace() / 2.0;
  const CMat2 w0 = w - tau * CMat2::Identity();
  const cplx s = std::sqrt(-w0.determinant());
  return std::exp(tau) * (std::cosh(s) * CMat2::Identity() + sinhc(s) * w0);
}

CMat2 matrix_log(const CMat2& X) {
  const cplx det = X.determinant();
  require(std::abs(det) > 0, "matrix logarithm of a singular matrix");
  const cplx tau = std::log(det) / 2.0;
  const CMat2 Y = X * std::exp(-tau);
  const cplx half_trace = Y.trace() / 2.0;
  // s = acosh(tr Y / 2); near the identity use s^2 = 2(c - 1) + O((c-1)^2)
  const cplx s = std::acosh(half_trace);
  return tau * CMat2::Identity() + (Y - half_trace * CMat2::Identity()) / sinhc(s);
}

MatFunction schrodinger_matrix(const BandFunction& v) {
  const double b = v.band();
  return MatFunction({v, BandFunction::constant(-1.0, b), BandFunction::constant(1.0, b), BandFunction({}, b)}, b);
}

MatFunction perturbed_schrodinger(const BandFunction& v, const MatFunction& w, int M) {
  M = fft_size_for(std::max(M, 4 * (v.degree() + w.degree()) + 8));
  const auto vs = v.samples(M);
  const auto ws = w.samples(M);
  std::vector<CMat2> out(M);
  for (int j = 0; j < M; ++j) {
    CMat2 a;
    a << vs[j], -1.0, 1.0, 0.0;
    out[j] = a * matrix_exp(ws[j]);
  }
  return MatFunction::from_samples(out, v.band());
}

MatFunction random_sl2_perturbation(std::mt19937_64& rng, int degree, double target_norm, double band) {
  require(degree >= 0 && target_norm > 0, "bad perturbation parameters");
  std::normal_distribution<double> g(0.0, 1.0);
  // real-valued entries: conjugate-symmetric coefficients
  auto real_poly = [&]() {
    BandFunction::Coefficients c;
    c[0] = g(rng);
    for (int k = 1; k <= degree; ++k) {
      const double decay = std::exp(-kTwoPi * band * k);
      const cplx z(g(rng) * decay, g(rng) * decay);
      c[k] = z;
      c[-k] = std::conj(z);
    }
    return BandFunction(c, band);
  };
  const BandFunction a = real_poly(), b = real_poly(), c = real_poly();
  MatFunction w({a, b, c, -a}, band);
  const double scale = target_norm / w.norm();
  return MatFunction({a * scale, b * scale, c * scale, a * (-scale)}, band);
}

double certified_inverse_bound(const BandFunction& v, double band, int points) {
  require(points >= 64, "certification grid too small");
  double lip = 0;
  for (const auto& [k, c] : v.coeffs()) lip += kTwoPi * std::abs(k) * std::abs(c) * std::exp(kTwoPi * band * std::abs(k));
  double min_abs = INFINITY;
  double wind[2] = {0, 0};
  for (int side = 0; side < 2; ++side) {
    const double y = side == 0 ? -band : band;
    cplx prev = v(cplx(0, y));
    for (int j = 1; j <= points; ++j) {
      const cplx cur = v(cplx(double(j) / points, y));
      min_abs = std::min(min_abs, std::abs(cur));
      wind[side] += std::arg(cur / prev);
      prev = cur;
    }
  }
  const double zeros = (wind[0] - wind[1]) / kTwoPi;
  require(std::abs(zeros) < 0.5, "v vanishes inside the band");
  const double bound = min_abs - lip * 0.5 / points;
  require(bound >= 1e-6, "1/v is not certifiably bounded on the band");
  return bound;
}

// --------------------------------------------------------- Schrodinger reduction

double conjugacy_residual(const MatFunction& A, const MatFunction& B, const BandFunction& v, double alpha, int M) {
  M = fft_size_for(std::max({M, 2 * A.degree() + 2, 2 * B.degree() + 2, 2 * v.degree() + 2}));
  const auto a = A.samples(M);
  const auto b = B.samples(M);
  const auto b1 = B.shifted(alpha).samples(M);
  const auto vs = v.samples(M);
  double r = 0;
  for (int j = 0; j < M; ++j) {
    CMat2 target;
    target << vs[j], -1.0, 1.0, 0.0;
    r = std::max(r, matrix_norm(b1[j] * a[j] * b[j].inverse() - target));
  }
  return r;
}

ReductionResult schrodinger_reduction(const MatFunction& A, const BandFunction& v, double alpha, double band,
                                      const ReductionOptions& opt) {
  require(band > 0, "band must be positive");
  require(opt.max_iter >= 0 && opt.tol > 0, "bad reduction options");
  ReductionResult out;
  out.inverse_bound = certified_inverse_bound(v, band);
  const double drop = opt.drop_rel;

  MatFunction Acur = A.truncated(drop);
  BandFunction vcur = BandFunction(v.coeffs(), band);
  MatFunction B = MatFunction::identity(band);
  double prev_norm = 0;
  int strikes = 0;

  for (int iter = 0;; ++iter) {
    const int M = fft_size_for(std::max({opt.grid, 4 * Acur.degree() + 8, 4 * vcur.degree() + 8}));
    const auto as = Acur.samples(M);
    const auto vs = vcur.samples(M);
    std::vector<CMat2> ws(M);
    for (int j = 0; j < M; ++j) {
      CMat2 inv;  // A^{(v)}(x)^{-1}
      inv << 0.0, 1.0, -1.0, vs[j];
      ws[j] = matrix_log(inv * as[j]);
    }
    const MatFunction w = MatFunction::from_samples(ws, band, drop);
    const double wn = w.norm();

    ReductionStep step;
    step.iter = iter;
    step.w_norm = wn;
    step.residual = conjugacy_residual(A, B, vcur, alpha, opt.residual_grid);
    step.quad_ratio = std::numeric_limits<double>::quiet_NaN();
    // the quadratic ratio is only meaningful while |w|^2 stays above roundoff
    if (iter > 0 && prev_norm >= 1e-6) {
      step.quad_ratio = wn / (prev_norm * prev_norm);
      out.max_quad_ratio = std::max(out.max_quad_ratio, step.quad_ratio);
    }
    out.history.push_back(step);
    out.iterations = iter;

    if (wn < opt.tol || iter == opt.max_iter) break;
    require(wn < std::log(2.0), "perturbation too large for the matrix logarithm");
    // below the roundoff floor of the pointwise log no contraction is visible
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, A.norm());
    if (iter > 0 && wn > std::max(opt.contraction_K * std::pow(prev_norm, 1.5), floor)) {
      if (++strikes >= 2) throw NotContracting("reduction step failed to contract quadratically twice in a row");
    } else {
      strikes = 0;
    }
    prev_norm = wn;

    // s and v~ from the first-order conditions
    const BandFunction& w1 = w.entry(0, 0);
    const BandFunction& w2 = w.entry(0, 1);
    const BandFunction& w3 = w.entry(1, 0);
    std::vector<cplx> qs(M), vw1(M);
    const auto w1s = w1.samples(M);
    for (int j = 0; j < M; ++j) {
      qs[j] = w1s[j] / vs[j];
      vw1[j] = vs[j] * w1s[j];
    }
    const BandFunction q = BandFunction::from_samples(qs, band, drop);
    const BandFunction s2 = w2 + q;
    const BandFunction s3 = -q.shifted(-alpha);
    const BandFunction zero({}, band);
    const MatFunction s({zero, s2, s3, zero}, band);
    vcur = (vcur - w3 + w2.shifted(alpha) + q.shifted(alpha) + BandFunction::from_samples(vw1, band, drop) -
            q.shifted(-alpha))
               .truncated(drop);

    const auto ss = s.samples(M);
    const auto ss1 = s.shifted(alpha).samples(M);
    const auto bs = B.samples(fft_size_for(std::max(M, 2 * B.degree() + 2)));
    const int MB = int(bs.size());
    const auto ssB = MB == M ? ss : s.samples(MB);
    std::vector<CMat2> anew(M), bnew(MB);
    for (int j = 0; j < M; ++j) anew[j] = matrix_exp(ss1[j]) * as[j] * matrix_exp(-ss[j]);
    for (int j = 0; j < MB; ++j) bnew[j] = matrix_exp(ssB[j]) * bs[j];
    Acur = MatFunction::from_samples(anew, band, drop);
    B = MatFunction::from_samples(bnew, band, drop);
  }
  out.v_out = vcur;
  out.B = B;
  out.residual = out.history.back().residual;
  return out;
}

// ------------------------------------------------------------ normalize_constant

Eigen::Matrix2d rotation(double theta) {
  const double c = std::cos(kTwoPi * theta), s = std::sin(kTwoPi * theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

namespace {

constexpr double kSinMargin = 1e-3;

bool good_angle(double theta) {
  const double s = std::sin(kTwoPi * theta);
  return s > kSinMargin && s < 1 - kSinMargin;
}

Eigen::Matrix2d companion(double E) {
  Eigen::Matrix2d k;
  k << E, -1, 1, 0;
  return k;
}

Eigen::Matrix2d C_theta(double theta) {
  const double s = std::sin(kTwoPi * theta), c = std::cos(kTwoPi * theta);
  Eigen::Matrix2d inv;
  inv << 0, -s, 1, -c;
  inv /= std::sqrt(s);
  return inv.inverse();
}

CMat2 to_complex(const Eigen::Matrix2d& m) { return m.cast<cplx>(); }

// R_{k x} as a trigonometric polynomial of degree |k|.
MatFunction rotation_function(int k, double band) {
  using C = BandFunction::Coefficients;
  const BandFunction cosf(C{{k, 0.5}, {-k, 0.5}}, band);
  const BandFunction sinf(C{{k, cplx(0, -0.5)}, {-k, cplx(0, 0.5)}}, band);
  return MatFunction({cosf, -sinf, sinf, cosf}, band);
}

int find_shift(double theta, double alpha) {
  for (int m = 1; m <= 100000; ++m)
    for (int k : {m, -m})
      if (good_angle(theta + k * alpha)) return k;
  throw PreconditionError("no rotation shift brings sin into (0, 1)");
}

double companion_residual_of(const MatFunction& C, const Eigen::Matrix2d& A, const Eigen::Matrix2d& target,
                             double alpha) {
  double r = 0;
  for (int j = 0; j < 64; ++j) {
    const double x = j / 64.0;
    const CMat2 c0 = C(cplx(x, 0)), c1 = C(cplx(x + alpha, 0));
    r = std::max(r, matrix_norm(c1 * to_complex(A) * unimodular_inverse<double>(c0) - to_complex(target)));
  }
  return r;
}

}  // namespace

NormalizeResult normalize_constant(const Eigen::Matrix2d& A, double alpha, const std::vector<double>& defects,
                                   const std::vector<double>& eps_schedule) {
  if (std::abs(A.determinant() - 1) > 1e-10) throw NotUnimodular("constant matrix must have determinant 1");
  NormalizeResult out;
  const double tr = A.trace();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double parabolic_tol = 1e-10 * scale * scale;

  if (std::abs(tr) > 2 + parabolic_tol) {
    out.case_id = 1;
    // cyclic vector p: C^{-1} = [p, A p - tr p], which needs det[p, A p] > 0
    Eigen::Matrix2d form;
    form << A(1, 0), (A(1, 1) - A(0, 0)) / 2, (A(1, 1) - A(0, 0)) / 2, -A(0, 1);
    Eigen::Vector2d p(1, 0);
    if (A(1, 0) <= 1e-3 * scale) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(form);
      p = es.eigenvectors().col(1);
    }
    Eigen::Matrix2d cinv;
    cinv.col(0) = p;
    cinv.col(1) = A * p - tr * p;
    cinv /= std::sqrt(cinv.determinant());
    out.base = cinv.inverse();
    out.E = tr;
    out.target = companion(tr);
    out.C = MatFunction::constant(to_complex(out.base), 0);
    out.companion_residual = (out.base * A * cinv - out.target).norm();
    return out;
  }

  if (std::abs(tr) < 2 - parabolic_tol) {
    out.case_id = 2;
    Eigen::EigenSolver<Eigen::Matrix2d> es(A);
    const cplx lam = es.eigenvalues()(0);
    const Eigen::Vector2cd u = es.eigenvectors().col(0);
    double phi = std::arg(lam);
    Eigen::Matrix2d P;
    P.col(0) = u.real();
    P.col(1) = -u.imag();
    if (P.determinant() < 0) {
      phi = -phi;
      P.col(1) = u.imag();
    }
    P /= std::sqrt(P.determinant());
    out.base = P.inverse();  // base A base^{-1} = R_theta
    out.theta = wrap_unit(phi / kTwoPi);
    double theta = out.theta;
    MatFunction C;
    if (good_angle(theta)) {
      C = MatFunction::constant(to_complex(C_theta(theta) * out.base), 0);
    } else {
      out.shift_k = find_shift(theta, alpha);
      theta = wrap_unit(theta + out.shift_k * alpha);
      C = MatFunction::constant(to_complex(C_theta(theta)), 0) * rotation_function(out.shift_k, 0) *
          MatFunction::constant(to_complex(out.base), 0);
    }
    out.E = 2 * std::cos(kTwoPi * theta);
    out.target = companion(out.E);
    out.C = C;
    out.companion_residual = companion_residual_of(C, A, out.target, alpha);
    return out;
  }

  out.case_id = 3;
  const double sign = tr > 0 ? 1.0 : -1.0;
  out.theta = sign > 0 ? 0.0 : 0.5;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();  // Q A Q^{-1} = sign [[1, t], [0, 1]]
  const bool scalar = (A - sign * Eigen::Matrix2d::Identity()).norm() <= 1e-10 * scale;
  if (!scalar) {
    const Eigen::Matrix2d Nil = A - sign * Eigen::Matrix2d::Identity();
    // eigenvector spans the kernel of N
    Eigen::Vector2d e = Nil.row(0).norm() >= Nil.row(1).norm() ? Eigen::Vector2d(-Nil(0, 1), Nil(0, 0))
                                                               : Eigen::Vector2d(-Nil(1, 1), Nil(1, 0));
    e.normalize();
    Eigen::Matrix2d qinv;
    qinv.col(0) = e;
    qinv.col(1) = Eigen::Vector2d(-e(1), e(0));
    Q = qinv.inverse();
  }
  out.base = Q;
  const Eigen::Matrix2d U = Q * A * Q.inverse();
  std::vector<double> d = defects;
  if (d.empty())
    for (int n = 1; n <= 5; ++n) d.push_back(std::pow(10.0, -2.0 * n));
  require(eps_schedule.empty() || eps_schedule.size() == d.size(), "eps schedule must match the defect sequence");
  Eigen::Matrix2d Ct = Eigen::Matrix2d::Identity();
  for (size_t n = 0; n < d.size(); ++n) {
    require(d[n] > 0, "defects must be positive");
    const double e = eps_schedule.empty() ? std::pow(d[n], 0.25) : eps_schedule[n];
    require(e > 0, "eps schedule must be positive");
    Ct << e, 0, e, 1 / e;
    if (scalar) Ct.setIdentity();
    JordanStep js;
    js.eps = e;
    js.defect = d[n];
    const double cn = Ct.jacobiSvd().singularValues()(0);
    js.weighted = cn * cn * d[n];
    js.residual = (Ct * U * Ct.inverse() - sign * Eigen::Matrix2d::Identity()).norm();
    out.jordan.push_back(js);
  }
  out.shift_k = find_shift(out.theta, alpha);
  const double theta = wrap_unit(out.theta + out.shift_k * alpha);
  out.E = 2 * std::cos(kTwoPi * theta);
  out.target = companion(out.E);
  out.C = MatFunction::constant(to_complex(C_theta(theta)), 0) * rotation_function(out.shift_k, 0) *
          MatFunction::constant(to_complex(Ct * Q), 0);
  out.companion_residual = companion_residual_of(out.C, A, out.target, alpha);
  return out;
}

// ------------------------------------------------------------ triangular oracle

CMat2 TriangularCocycle::matrix(double x) const {
  CMat2 m;
  m << cis(kTwoPi * theta), t_hat * cis(kTwoPi * double(r) * x), 0.0, cis(-kTwoPi * theta);
  return m;
}

MatFunction TriangularCocycle::as_function(double band) const {
  using C = BandFunction::Coefficients;
  return MatFunction({BandFunction(C{{0, cis(kTwoPi * theta)}}, band), BandFunction(C{{r, t_hat}}, band),
                      BandFunction({}, band), BandFunction(C{{0, cis(-kTwoPi * theta)}}, band)},
                     band);
}

namespace {

// Fills normX and invnormX from the Hermitian matrix [[x11, x1], [conj x1, x2]].
void finish(TXRecord& rec) {
  const double half_sum = (rec.x11 + rec.x2) / 2;
  const double half_diff = (rec.x2 - rec.x11) / 2;
  rec.normX = half_sum + std::sqrt(half_diff * half_diff + std::norm(rec.x1));
  rec.invnormX = rec.detX / rec.normX;
}

// 1 - sin(m y) / (m sin y), accurate also for small m y.
double one_minus_sinc_ratio(double m, double y) {
  const double a = (m * y) * (m * y);
  if (a < 1e-4) {
    const double b = y * y;
    const double D = 1 - b / 6 + b * b / 120 - b * b * b / 5040;
    // N, D: series of sin(m y)/(m y) and sin(y)/y; D - N = (a - b)/6 - (a^2 - b^2)/120 + ..., a - b = (m^2 - 1) b
    const double amb = (m * m - 1) * b;
    return (amb / 6 - amb * (a + b) / 120 + amb * (a * a + a * b + b * b) / 5040) / D;
  }
  return 1 - std::sin(m * y) / (m * std::sin(y));
}

}  // namespace

cplx tx_t_j(const TriangularCocycle& tc, double x, std::int64_t j) {
  const double d = tc.delta();
  const cplx pre = tc.t_hat * cis(kTwoPi * (tc.r * x + double(j - 1) * tc.theta));
  const cplx den = expm1_i(kTwoPi * d);
  if (std::abs(den) < 1e-300) return pre * double(j);
  return pre * expm1_i(kTwoPi * double(j) * d) / den;
}

CMat2 tx_product(const TriangularCocycle& tc, double x, std::int64_t j) {
  CMat2 m = CMat2::Identity();
  for (std::int64_t i = 0; i < j; ++i) m = tc.matrix(x + double(i) * tc.alpha) * m;
  return m;
}

TXRecord tx_closed_form(const TriangularCocycle& tc, double x) {
  require(tc.k >= 1, "k must be positive");
  const double k = double(tc.k);
  const double t2 = std::norm(tc.t_hat);
  // delta = m/2 + dp with |dp| <= 1/4; every trigonometric quantity below is
  // evaluated at y = 2 pi dp, with the parity of m supplying the signs
  const long double dl = (long double)tc.r * (long double)tc.alpha - 2.0L * (long double)tc.theta;
  const long double half = std::nearbyint(2.0L * dl);
  const bool odd = std::fmod(std::fabs(half), 2.0L) == 1.0L;
  const double dp = double(dl - half / 2.0L);
  const cplx phase = tc.t_hat * cis(kTwoPi * (tc.r * x - tc.theta));
  TXRecord rec;
  rec.x11 = k;
  if (std::abs(dp) < 1e-12) {
    if (!odd) {
      rec.x1 = phase * k * k;
      rec.x2 = k + t2 * k * (4 * k * k - 1) / 3;
      rec.detX = k * k * (1 + t2 * (k * k - 1) / 3);
    } else {
      // the odd-index sums alternate and collapse
      rec.x1 = phase * k;
      rec.x2 = k * (1 + t2);
      rec.detX = k * k;
    }
  } else {
    const double y = kTwoPi * dp;
    const cplx e1 = odd ? -(cis(y) + 1.0) : expm1_i(y);  // e^{2 pi i delta} - 1
    const double e1abs2 = std::norm(e1);
    const double om1 = one_minus_sinc_ratio(k, y);
    const double om2 = one_minus_sinc_ratio(2 * k, y);
    const double sky = std::sin(k * y);
    // sum_{j<=k} (e^{i(2j-1)y} - 1) = -k om2 + i sin^2(ky) / sin(y)
    const cplx even_sum(-k * om2, sky * sky / std::sin(y));
    const cplx sum_terms = odd ? -even_sum - 2 * k : even_sum;
    rec.x1 = phase * sum_terms / e1;
    rec.x2 = k * (1 + 2 * t2 / e1abs2 * (odd ? 2 - om2 : om2));
    rec.detX = k * k * (1 + t2 / e1abs2 * om1 * (2 - om1));
  }
  finish(rec);
  return rec;
}

TXRecord tx_bruteforce(const TriangularCocycle& tc, double x) {
  require(tc.k >= 1 && tc.k <= 1000000, "brute force needs 1 <= k <= 1e6");
  CMat2 X = CMat2::Zero();
  CMat2 Tj = CMat2::Identity();
  for (std::int64_t j = 1; j <= 2 * tc.k - 1; ++j) {
    Tj = tc.matrix(x + double(j - 1) * tc.alpha) * Tj;
    if (j % 2 == 1) X += Tj.adjoint() * Tj;
  }
  TXRecord rec;
  rec.x11 = X(0, 0).real();
  rec.x1 = X(0, 1);
  rec.x2 = X(1, 1).real();
  rec.detX = rec.x11 * rec.x2 - std::norm(rec.x1);
  finish(rec);
  return rec;
}

TXAsymptotics tx_asymptotics_check(const TriangularCocycle& tc, double x) {
  require(tc.k >= 2, "asymptotic comparison needs k >= 2");
  const auto rec = tx_closed_form(tc, x);
  const double k = double(tc.k);
  const double dn = torus_norm<double>(tc.delta());
  const double m = dn > 0 ? std::min(k * k, 1 / (dn * dn)) : k * k;
  return {rec.normX / (k * (1 + std::norm(tc.t_hat) * m)), rec.invnormX / k};
}

namespace {

CMat2 sum_X(const MatFunction& T, double alpha, double x, std::int64_t k) {
  CMat2 X = CMat2::Zero();
  CMat2 Tj = CMat2::Identity();
  for (std::int64_t j = 1; j <= 2 * k - 1; ++j) {
    Tj = T(cplx(x + double(j - 1) * alpha, 0)) * Tj;
    if (j % 2 == 1) X += Tj.adjoint() * Tj;
  }
  return X;
}

double hermitian_norm(const CMat2& H) {
  const double a = H(0, 0).real(), d = H(1, 1).real();
  return std::abs((a + d) / 2) + std::sqrt((a - d) * (a - d) / 4 + std::norm(H(0, 1)));
}

}  // namespace

PerturbationCheck perturbation_bound_check(const TriangularCocycle& tc, double x, const MatFunction& Ttilde,
                                           int phase_grid) {
  require(tc.k >= 1, "k must be positive");
  const MatFunction T = tc.as_function();
  PerturbationCheck out;
  const CMat2 X = sum_X(T, tc.alpha, x, tc.k);
  const CMat2 Xt = sum_X(Ttilde, tc.alpha, x, tc.k);
  out.lhs = hermitian_norm(Xt - X);
  for (int j = 0; j < phase_grid; ++j) {
    const cplx y(double(j) / phase_grid, 0);
    out.premise = std::max(out.premise, matrix_norm(Ttilde(y) - T(y)));
  }
  const double k = double(tc.k);
  const double tnorm = std::abs(tc.t_hat);
  out.rhs = kPerturbationConstant / (k * k * (1 + 2 * k * tnorm) * (1 + 2 * k * tnorm));
  out.premise_holds = out.premise <= out.rhs;
  out.holds = out.lhs <= 1;
  return out;
}

ThresholdSweep perturbation_threshold(const TriangularCocycle& tc, double x, double eta_start, double factor,
                                      int max_steps) {
  require(eta_start > 0 && factor > 0 && factor < 1, "bad sweep parameters");
  ThresholdSweep out;
  const MatFunction T = tc.as_function();
  const cplx e = cis(kTwoPi * tc.theta);
  double eta = eta_start;
  for (int i = 0; i < max_steps; ++i, eta *= factor) {
    // T (Id + eta E12) adds eta e^{2 pi i theta} to the upper-right entry
    MatFunction Tt({T.entry(0, 0), T.entry(0, 1) + BandFunction::constant(eta * e, 0), T.entry(1, 0), T.entry(1, 1)},
                   0);
    const double lhs = perturbation_bound_check(tc, x, Tt, 16).lhs;
    out.samples.emplace_back(eta, lhs);
    if (lhs <= 1) {
      out.eta_threshold = eta;
      break;
    }
  }
  const double k = double(tc.k);
  const double t = std::abs(tc.t_hat);
  out.implied_c = out.eta_threshold * k * k * (1 + 2 * k * t) * (1 + 2 * k * t);
  return out;
}

}  // namespace quasispec
