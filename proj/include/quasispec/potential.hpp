#pragma once

#include <complex>
#include <map>
#include <string>

#include "quasispec/types.hpp"

namespace quasispec {

/// Real analytic potential on R/Z: either the almost Mathieu cosine
/// 2 lambda cos(2 pi x) or a trigonometric polynomial given by its Fourier
/// coefficients with v_{-k} = conj(v_k).
class Potential {
 public:
  enum class Kind { Amo, TrigPoly };
  using Coefficients = std::map<int, std::complex<double>>;

  static Potential amo(double lambda);
  static Potential zero() { return trig_poly({}); }
  /// Missing negative modes are filled by conjugate symmetry; inconsistent
  /// pairs are rejected.
  static Potential trig_poly(const Coefficients& coeffs);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }

  /// Full coefficient map including both signs (AMO gives modes +-1).
  const Coefficients& coefficients() const { return coeffs_; }

  template <typename Real>
  Real operator()(Real x) const {
    if (kind_ == Kind::Amo) return Real(2) * Real(lambda_) * std::cos(two_pi<Real> * x);
    Real acc = 0;
    for (const auto& [k, c] : coeffs_) {
      if (k < 0) continue;
      const Real phase = two_pi<Real> * Real(k) * x;
      const Real re = Real(c.real()) * std::cos(phase) - Real(c.imag()) * std::sin(phase);
      acc += k == 0 ? Real(c.real()) : Real(2) * re;
    }
    return acc;
  }

  /// Analytic continuation to complex x (used for band-norm certification).
  std::complex<double> at(std::complex<double> x) const;

  /// sup_x |v(x)| upper bound, sum of |v_k|.
  double sup_bound() const;

  /// x -> v(-x).
  Potential reflected() const;

  bool is_zero() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::TrigPoly;
  double lambda_ = 0;
  Coefficients coeffs_;
};

}  // namespace quasispec
