#include "quasispec/io.hpp"

#include <cstdio>
#include <fstream>

#include "quasispec/errors.hpp"

namespace quasispec {

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_real(long double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.21Lg", x);
  return buf;
}

json to_json(const Frequency& f) {
  json conv = json::array();
  for (const auto& c : f.convergents) conv.push_back({c.p, c.q});
  return {{"label", f.label}, {"value_decimal_string", format_real(f.value)}, {"cf_terms", f.cf_terms},
          {"convergents", conv}};
}

json to_json(const Potential& v) {
  if (v.kind() == Potential::Kind::Amo) return {{"variant", "amo"}, {"lambda", v.lambda()}};
  json coeffs = json::array();
  for (const auto& [k, c] : v.coefficients())
    if (k >= 0) coeffs.push_back({k, c.real(), c.imag()});
  return {{"variant", "trigpoly"}, {"coeffs", coeffs}};
}

Potential potential_from_json(const json& j) {
  require(j.is_object() && j.contains("variant"), "potential JSON needs a variant");
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "amo") return Potential::amo(j.at("lambda").get<double>());
  require(variant == "trigpoly", "unknown potential variant: " + variant);
  Potential::Coefficients c;
  for (const auto& row : j.at("coeffs")) {
    require(row.is_array() && row.size() == 3, "trigpoly coefficients are [k, re, im] triples");
    c[row[0].get<int>()] = {row[1].get<double>(), row[2].get<double>()};
  }
  return Potential::trig_poly(c);
}

json to_json(const BandFunction& f) {
  json out = json::array();
  for (const auto& [k, c] : f.coeffs()) out.push_back({k, c.real(), c.imag()});
  return out;
}

BandFunction band_function_from_json(const json& j, double band) {
  BandFunction::Coefficients c;
  for (const auto& row : j) {
    require(row.is_array() && row.size() == 3, "coefficients are [k, re, im] triples");
    c[row[0].get<int>()] += cplx(row[1].get<double>(), row[2].get<double>());
  }
  return BandFunction(c, band);
}

json to_json(const MatFunction& m) {
  json entries = json::array();
  for (const auto& e : m.entries()) entries.push_back(to_json(e));
  return {{"band", m.band()}, {"entries", entries}};
}

MatFunction mat_function_from_json(const json& j) {
  const double band = j.at("band").get<double>();
  const auto& entries = j.at("entries");
  require(entries.is_array() && entries.size() == 4, "MatFunction needs four entries");
  std::array<BandFunction, 4> e;
  for (int i = 0; i < 4; ++i) e[i] = band_function_from_json(entries[i], band);
  return MatFunction(std::move(e), band);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  require(cells.size() == header_.size(), "CSV row width does not match the header");
  rows_.push_back(cells);
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

json CsvTable::to_json() const {
  json arr = json::array();
  for (const auto& r : rows_) {
    json obj = json::object();
    for (size_t i = 0; i < r.size(); ++i) {
      const auto& cell = r[i];
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (!cell.empty() && end && *end == '\0' && std::isfinite(x))
        obj[header_[i]] = x;
      else
        obj[header_[i]] = cell;
    }
    arr.push_back(obj);
  }
  return arr;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "cannot open output file: " + path);
  f << content;
  require(bool(f), "failed writing output file: " + path);
}

}  // namespace quasispec
