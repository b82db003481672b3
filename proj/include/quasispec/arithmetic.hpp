#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace quasispec {

/// Distance from x to the nearest integer.
template <typename Real>
Real torus_norm(Real x) {
  using std::abs;
  using std::nearbyint;
  return abs(x - nearbyint(x));
}

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

/// An irrational frequency in (0,1) with its continued-fraction data.
///
/// `cf_terms[i]` is a_{i+1} and `convergents[i]` is p_{i+1}/q_{i+1}, so the
/// first stored denominator is q_1 = a_1.
struct Frequency {
  long double value = 0;
  std::vector<std::int64_t> cf_terms;
  std::vector<Convergent> convergents;
  std::string label;

  std::size_t depth() const { return cf_terms.size(); }

  /// ||q_n alpha|| computed as |q_n alpha - p_n| with a fused multiply-add.
  long double approximation_error(std::size_t n) const;
};

/// Remainders below this are treated as a terminated expansion.
inline constexpr long double kRationalThreshold = 0x1p-60L;

/// Continued-fraction expansion of alpha to `depth` terms by the Gauss map in
/// extended precision. Throws RationalDetected on a terminated expansion and
/// PreconditionError when the requested depth exceeds what the working
/// precision can resolve.
Frequency expand(long double alpha, int depth);

/// Frequency from explicit continued-fraction terms (value evaluated backward).
Frequency from_cf_terms(const std::vector<std::int64_t>& terms);

/// "golden" = (sqrt5 - 1)/2 and "silver" = sqrt2 - 1, from closed forms.
Frequency preset(const std::string& name, int depth = 30);

/// Accepts a preset name, "cf:a1,a2,..." or a decimal string.
Frequency parse_frequency(const std::string& spec, int depth = 30);

/// max_{n>=2} ln q_{n+1} / ln q_n over the stored convergents.
double diophantine_score(const Frequency& freq);

struct ResonanceSet {
  long double theta = 0;
  double eps0 = 0;
  std::vector<std::int64_t> indices;
  std::int64_t scan_limit = 0;
};

/// Exhaustive scan of |k| <= K for eps0-resonances of 2 theta against alpha.
/// Minimality ties go to the smaller |k|, then to the positive sign.
ResonanceSet resonances(const Frequency& freq, long double theta, double eps0, std::int64_t K);

struct RepulsionRow {
  std::size_t j = 0;
  std::int64_t next_abs = 0;    // |n_{j+1}|, or scan_limit + 1 when censored
  long double distance = 0;     // ||2 theta - n_j alpha||, clamped at the precision floor
  double exponent = 0;          // ln |n_{j+1}| / ln (1 / distance)
  bool censored = false;        // no further resonance inside the scan window
};

/// Raw repulsion data for consecutive resonances. The last resonance gets a
/// censored row whose next index is only known to exceed the scan window.
std::vector<RepulsionRow> resonance_repulsion_check(const ResonanceSet& rs, const Frequency& freq);

/// Least-squares slope of ln |n_{j+1}| against ln(1/distance) over the
/// uncensored rows; NaN with fewer than two rows.
double fit_repulsion_exponent(const std::vector<RepulsionRow>& rows);

}  // namespace quasispec
