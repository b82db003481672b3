#include "quasispec/potential.hpp"

#include <cmath>
#include <sstream>

#include "quasispec/errors.hpp"

namespace quasispec {

Potential Potential::amo(double lambda) {
  Potential p;
  p.kind_ = Kind::Amo;
  p.lambda_ = lambda;
  p.coeffs_ = {{-1, {lambda, 0.0}}, {1, {lambda, 0.0}}};
  return p;
}

Potential Potential::trig_poly(const Coefficients& coeffs) {
  Potential p;
  p.kind_ = Kind::TrigPoly;
  double scale = 0;
  for (const auto& [k, c] : coeffs) scale = std::max(scale, std::abs(c));
  for (const auto& [k, c] : coeffs) {
    if (k == 0) {
      require(std::abs(c.imag()) <= 1e-12 * std::max(scale, 1.0), "mode 0 of a real potential must be real");
      p.coeffs_[0] = {c.real(), 0.0};
      continue;
    }
    auto mirror = coeffs.find(-k);
    if (mirror != coeffs.end())
      require(std::abs(mirror->second - std::conj(c)) <= 1e-12 * std::max(scale, 1.0),
              "potential coefficients violate v_{-k} = conj(v_k)");
    p.coeffs_[k] = c;
    p.coeffs_[-k] = std::conj(c);
  }
  for (auto it = p.coeffs_.begin(); it != p.coeffs_.end();) {
    if (it->second == std::complex<double>{}) {
      it = p.coeffs_.erase(it);
    } else {
      ++it;
    }
  }
  return p;
}

std::complex<double> Potential::at(std::complex<double> x) const {
  std::complex<double> acc = 0;
  for (const auto& [k, c] : coeffs_) acc += c * std::exp(std::complex<double>(0, two_pi<double> * k) * x);
  return acc;
}

double Potential::sup_bound() const {
  double s = 0;
  for (const auto& [k, c] : coeffs_) s += std::abs(c);
  return s;
}

Potential Potential::reflected() const {
  if (kind_ == Kind::Amo) return *this;
  Coefficients flipped;
  for (const auto& [k, c] : coeffs_) flipped[-k] = c;
  return trig_poly(flipped);
}

bool Potential::is_zero() const {
  for (const auto& [k, c] : coeffs_)
    if (c != std::complex<double>{}) return false;
  return true;
}

std::string Potential::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Amo) {
    os << "amo(lambda=" << lambda_ << ")";
  } else {
    os << "trigpoly(" << coeffs_.size() << " modes)";
  }
  return os.str();
}

}  // namespace quasispec
