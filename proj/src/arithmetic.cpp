#include "quasispec/arithmetic.hpp"

#include <cfloat>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "quasispec/errors.hpp"

namespace quasispec {

namespace {

constexpr long double kDistanceFloor = LDBL_EPSILON;

void append_convergent(Frequency& f, std::int64_t a) {
  const auto& c = f.convergents;
  const std::int64_t p1 = c.empty() ? 0 : c.back().p;
  const std::int64_t q1 = c.empty() ? 1 : c.back().q;
  const std::int64_t p2 = c.size() < 2 ? (c.empty() ? 1 : 0) : c[c.size() - 2].p;
  const std::int64_t q2 = c.size() < 2 ? (c.empty() ? 0 : 1) : c[c.size() - 2].q;
  if (a > 0 && q1 > (std::numeric_limits<std::int64_t>::max() - q2) / a)
    throw PreconditionError("continued-fraction denominator overflows 64 bits");
  f.cf_terms.push_back(a);
  f.convergents.push_back({a * p1 + p2, a * q1 + q2});
}

}  // namespace

long double Frequency::approximation_error(std::size_t n) const {
  const auto& c = convergents.at(n);
  return std::fabs(std::fmal(static_cast<long double>(c.q), value, -static_cast<long double>(c.p)));
}

Frequency expand(long double alpha, int depth) {
  require(alpha > 0 && alpha < 1, "frequency must lie in (0,1)");
  require(depth >= 1, "depth must be at least 1");
  Frequency f;
  f.value = alpha;
  long double x = alpha;
  for (int i = 0; i < depth; ++i) {
    if (x < kRationalThreshold) {
      std::ostringstream os;
      os << "expansion terminated after " << i << " terms";
      throw RationalDetected(os.str());
    }
    const long double inv = 1.0L / x;
    const long double a = std::floor(inv);
    x = inv - a;
    append_convergent(f, static_cast<std::int64_t>(a));
    // Gauss-map roundoff grows like q_n^2; beyond this the terms are noise.
    const long double q = static_cast<long double>(f.convergents.back().q);
    if (q * q * LDBL_EPSILON > 0x1p-10L && i + 1 < depth)
      throw PreconditionError("requested depth exceeds extended working precision");
  }
  if (x < kRationalThreshold) throw RationalDetected("expansion terminated at the requested depth");
  return f;
}

Frequency from_cf_terms(const std::vector<std::int64_t>& terms) {
  require(!terms.empty(), "need at least one continued-fraction term");
  Frequency f;
  for (auto a : terms) {
    require(a >= 1, "continued-fraction terms must be positive");
    append_convergent(f, a);
  }
  long double x = 0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) x = 1.0L / (static_cast<long double>(*it) + x);
  f.value = x;
  return f;
}

Frequency preset(const std::string& name, int depth) {
  require(depth >= 1, "depth must be at least 1");
  long double value = 0;
  std::int64_t term = 0;
  if (name == "golden") {
    value = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    term = 1;
  } else if (name == "silver") {
    value = std::sqrt(2.0L) - 1.0L;
    term = 2;
  } else {
    throw PreconditionError("unknown frequency preset: " + name);
  }
  // The terms are known exactly, so no Gauss-map depth limit applies; only
  // the 64-bit denominators bound the depth.
  Frequency f;
  for (int i = 0; i < depth; ++i) append_convergent(f, term);
  f.value = value;
  f.label = name;
  return f;
}

Frequency parse_frequency(const std::string& spec, int depth) {
  if (spec == "golden" || spec == "silver") return preset(spec, depth);
  if (spec.rfind("cf:", 0) == 0) {
    std::vector<std::int64_t> terms;
    std::stringstream ss(spec.substr(3));
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const long long a = std::strtoll(item.c_str(), &end, 10);
      require(end != item.c_str() && *end == '\0', "bad continued-fraction term: " + item);
      terms.push_back(a);
    }
    Frequency f = from_cf_terms(terms);
    f.label = spec;
    return f;
  }
  char* end = nullptr;
  const long double value = std::strtold(spec.c_str(), &end);
  require(end != spec.c_str() && *end == '\0', "cannot parse frequency: " + spec);
  Frequency f = expand(value, depth);
  f.label = spec;
  return f;
}

double diophantine_score(const Frequency& freq) {
  require(freq.convergents.size() >= 3, "diophantine score needs at least three convergents");
  double score = 1.0;
  // Stored index i holds q_{i+1}; n >= 2 means i >= 1.
  for (std::size_t i = 1; i + 1 < freq.convergents.size(); ++i) {
    const double qn = static_cast<double>(freq.convergents[i].q);
    const double qn1 = static_cast<double>(freq.convergents[i + 1].q);
    score = std::max(score, std::log(qn1) / std::log(qn));
  }
  return score;
}

ResonanceSet resonances(const Frequency& freq, long double theta, double eps0, std::int64_t K) {
  require(eps0 > 0, "eps0 must be positive");
  require(K >= 1, "scan limit must be at least 1");
  ResonanceSet rs{theta, eps0, {0}, K};
  const long double two_theta = 2.0L * theta;
  auto distance = [&](std::int64_t k) {
    return torus_norm(std::fmal(-static_cast<long double>(k), freq.value, two_theta));
  };
  long double best = distance(0);
  for (std::int64_t m = 1; m <= K; ++m) {
    const long double dp = distance(m);
    const long double dm = distance(-m);
    const long double bound = std::exp(-static_cast<long double>(m) * eps0);
    if (dp < best && dp <= dm && dp <= bound) rs.indices.push_back(m);
    if (dm < best && dm < dp && dm <= bound) rs.indices.push_back(-m);
    best = std::min({best, dp, dm});
  }
  return rs;
}

std::vector<RepulsionRow> resonance_repulsion_check(const ResonanceSet& rs, const Frequency& freq) {
  std::vector<RepulsionRow> rows;
  if (rs.indices.size() < 2) return rows;
  for (std::size_t j = 0; j < rs.indices.size(); ++j) {
    RepulsionRow row;
    row.j = j;
    const long double raw =
        torus_norm(std::fmal(-static_cast<long double>(rs.indices[j]), freq.value, 2.0L * rs.theta));
    row.distance = std::max(raw, kDistanceFloor);
    row.censored = j + 1 == rs.indices.size();
    row.next_abs = row.censored ? rs.scan_limit + 1 : std::llabs(rs.indices[j + 1]);
    row.exponent = static_cast<double>(std::log(static_cast<long double>(row.next_abs)) /
                                       -std::log(row.distance));
    rows.push_back(row);
  }
  return rows;
}

double fit_repulsion_exponent(const std::vector<RepulsionRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.censored) continue;
    const double x = static_cast<double>(-std::log(r.distance));
    const double y = std::log(static_cast<double>(r.next_abs));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  return denom != 0 ? (n * sxy - sx * sy) / denom : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace quasispec
