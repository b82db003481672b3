#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "quasispec/errors.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/types.hpp"

namespace quasispec {

using cplx = std::complex<double>;
using CMat2 = Mat2<double>;

/// Trigonometric polynomial on R/Z viewed as an analytic function on the
/// strip |Im x| < band. The norm is the coefficient majorant
/// sum |f_k| e^{2 pi band |k|}, which dominates the sup over the strip.
class BandFunction {
 public:
  using Coefficients = std::map<int, cplx>;

  BandFunction() = default;
  BandFunction(Coefficients coeffs, double band);
  static BandFunction constant(cplx c, double band);
  /// Coefficients of the potential itself.
  static BandFunction from_potential(const Potential& v, double band);
  /// Fourier coefficients of samples on x_j = j / M (M even); the Nyquist
  /// mode is discarded.
  static BandFunction from_samples(const std::vector<cplx>& values, double band, double drop_rel = 1e-16);

  const Coefficients& coeffs() const { return coeffs_; }
  double band() const { return band_; }
  int degree() const;

  cplx operator()(cplx x) const;
  /// Values on x_j = j / M, M a power of two not below 2 * degree + 2.
  std::vector<cplx> samples(int M) const;

  double norm() const;
  double sup_on_grid(int M = 512) const;
  /// max_k |f_{-k} - conj f_k| relative to the norm: zero for real-valued f.
  double reality_defect() const;

  /// x -> f(x + a).
  BandFunction shifted(double a) const;
  /// Drops modes whose weighted size is below rel * norm.
  BandFunction truncated(double rel) const;

  BandFunction operator+(const BandFunction& o) const;
  BandFunction operator-(const BandFunction& o) const;
  BandFunction operator*(const BandFunction& o) const;
  BandFunction operator*(cplx s) const;
  BandFunction operator-() const { return *this * cplx(-1); }

 private:
  Coefficients coeffs_;
  double band_ = 0;
};

/// 2x2 matrix of band functions, entries in row-major order.
class MatFunction {
 public:
  MatFunction() = default;
  MatFunction(std::array<BandFunction, 4> entries, double band);
  static MatFunction constant(const CMat2& m, double band);
  static MatFunction identity(double band) { return constant(CMat2::Identity(), band); }
  /// Entrywise Fourier coefficients of matrix samples on x_j = j / M.
  static MatFunction from_samples(const std::vector<CMat2>& values, double band, double drop_rel = 1e-16);

  const BandFunction& entry(int i, int j) const { return e_[2 * i + j]; }
  const std::array<BandFunction, 4>& entries() const { return e_; }
  double band() const { return band_; }
  int degree() const;

  CMat2 operator()(cplx x) const;
  std::vector<CMat2> samples(int M) const;

  /// max row sum of entry band norms (submultiplicative).
  double norm() const;
  /// sup over x_j = j / M of the operator norm.
  double sup_on_grid(int M = 512) const;
  /// sup over the grid of |det - 1|.
  double det_defect(int M = 512) const;

  MatFunction shifted(double a) const;
  MatFunction truncated(double rel) const;
  MatFunction operator*(const MatFunction& o) const;
  MatFunction operator+(const MatFunction& o) const;
  MatFunction operator-(const MatFunction& o) const;

 private:
  std::array<BandFunction, 4> e_;
  double band_ = 0;
};

/// Smallest power of two >= n.
int fft_size_for(int n);

/// exp and log on 2x2 matrices by Cayley-Hamilton.
CMat2 matrix_exp(const CMat2& w);
CMat2 matrix_log(const CMat2& X);

/// x -> [[v(x), -1], [1, 0]].
MatFunction schrodinger_matrix(const BandFunction& v);

/// x -> A^{(v)}(x) e^{w(x)}, assembled pointwise on an M-point grid.
MatFunction perturbed_schrodinger(const BandFunction& v, const MatFunction& w, int M = 512);

/// Random real-analytic sl(2,R)-valued trigonometric polynomial of the
/// given degree, rescaled to band norm `target_norm`.
MatFunction random_sl2_perturbation(std::mt19937_64& rng, int degree, double target_norm, double band);

/// Certified lower bound for |v| on |Im x| <= band: boundary minimum minus a
/// Lipschitz correction, after a winding-number check that v has no zeros in
/// the strip. Throws PreconditionError if the bound is below 1e-6.
double certified_inverse_bound(const BandFunction& v, double band, int points = 4096);

struct ReductionOptions {
  int grid = 512;            // sampling grid for nonlinear pointwise operations
  int max_iter = 8;
  double tol = 1e-11;        // stop once |w| falls below this
  double contraction_K = 100;  // NotContracting if |w'| > K |w|^{1.5} twice in a row
  double drop_rel = 1e-16;
  int residual_grid = 512;
};

struct ReductionStep {
  int iter = 0;
  double w_norm = 0;
  double residual = 0;
  double quad_ratio = 0;  // |w_m| / |w_{m-1}|^2, or NaN when not measured
};

struct ReductionResult {
  BandFunction v_out;
  MatFunction B;
  double residual = 0;
  int iterations = 0;
  double max_quad_ratio = 0;
  double inverse_bound = 0;
  std::vector<ReductionStep> history;
};

/// Iteratively conjugates A = A^{(v)} e^{w} towards Schrodinger form by
/// x -> e^{s(x)} with s = [[0, w12 + w11/v], [-(w11/v)(x - alpha), 0]],
/// updating v to the matching first-order correction.
ReductionResult schrodinger_reduction(const MatFunction& A, const BandFunction& v, double alpha, double band,
                                      const ReductionOptions& opt = {});

/// sup over a grid of ||B(x + alpha) A(x) B(x)^{-1} - A^{(v)}(x)||.
double conjugacy_residual(const MatFunction& A, const MatFunction& B, const BandFunction& v, double alpha,
                          int M = 512);

struct JordanStep {
  double eps = 0;
  double defect = 0;
  double weighted = 0;  // ||C~||^2 * defect
  double residual = 0;  // ||C~ U C~^{-1} - (+-Id)||
};

struct NormalizeResult {
  int case_id = 0;        // 1 hyperbolic, 2 elliptic, 3 parabolic
  double E = 0;           // companion entry of the target form
  Eigen::Matrix2d target;
  Eigen::Matrix2d base;   // constant SL(2,R) part applied first
  double theta = 0;       // rotation number of the elliptic/parabolic normal form
  int shift_k = 0;        // 0 when the conjugator is constant
  MatFunction C;          // full (possibly x-dependent) conjugator
  double companion_residual = 0;  // sup_x ||C(x + alpha) A C(x)^{-1} - target||
  std::vector<JordanStep> jordan;
};

/// Conjugates a constant SL(2,R) matrix to [[E, -1], [1, 0]] with E != 0.
/// In the parabolic case `defects` is the caller's defect sequence and
/// `eps_schedule` the matching shrinking parameters (default defect^{1/4}).
NormalizeResult normalize_constant(const Eigen::Matrix2d& A, double alpha, const std::vector<double>& defects = {},
                                   const std::vector<double>& eps_schedule = {});

Eigen::Matrix2d rotation(double theta);

/// T(x) = [[e^{2 pi i theta}, t_hat e^{2 pi i r x}], [0, e^{-2 pi i theta}]].
struct TriangularCocycle {
  double theta = 0;
  double alpha = 0;
  int r = 0;
  cplx t_hat = 0;
  std::int64_t k = 1;

  double delta() const { return double(r) * alpha - 2 * theta; }
  CMat2 matrix(double x) const;
  MatFunction as_function(double band = 0) const;
};

struct TXRecord {
  cplx x1 = 0;
  double x11 = 0;  // equals k in the closed form
  double x2 = 0;
  double detX = 0;
  double normX = 0;
  double invnormX = 0;
};

TXRecord tx_closed_form(const TriangularCocycle& tc, double x);
TXRecord tx_bruteforce(const TriangularCocycle& tc, double x);
/// Upper-right entry of T_j from the geometric-sum formula.
cplx tx_t_j(const TriangularCocycle& tc, double x, std::int64_t j);
/// Explicit product T(x + (j-1) alpha) ... T(x).
CMat2 tx_product(const TriangularCocycle& tc, double x, std::int64_t j);

struct TXAsymptotics {
  double norm_ratio = 0;
  double inv_ratio = 0;
};
TXAsymptotics tx_asymptotics_check(const TriangularCocycle& tc, double x);

inline constexpr double kPerturbationConstant = 1.0 / 16.0;

struct PerturbationCheck {
  double lhs = 0;      // ||X~ - X||
  double premise = 0;  // ||T~ - T||_0 on a phase grid
  double rhs = 0;      // c k^{-2} (1 + 2 k ||t||_0)^{-2}
  bool premise_holds = false;
  bool holds = false;  // lhs <= 1
};
PerturbationCheck perturbation_bound_check(const TriangularCocycle& tc, double x, const MatFunction& Ttilde,
                                           int phase_grid = 256);

struct ThresholdSweep {
  double eta_threshold = 0;  // largest swept eta with lhs <= 1
  double implied_c = 0;      // eta_threshold / (k^{-2} (1 + 2k|t|)^{-2})
  std::vector<std::pair<double, double>> samples;  // (eta, lhs)
};
/// Sweeps T~ = T (Id + eta E12) downward from eta_start by `factor` until the
/// bound holds.
ThresholdSweep perturbation_threshold(const TriangularCocycle& tc, double x, double eta_start = 1.0,
                                      double factor = 0.5, int max_steps = 80);

}  // namespace quasispec
