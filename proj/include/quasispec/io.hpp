#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "quasispec/arithmetic.hpp"
#include "quasispec/conjugation.hpp"
#include "quasispec/potential.hpp"

namespace quasispec {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal for a double ("%.17g").
std::string format_real(double x);
std::string format_real(long double x);

json to_json(const Frequency& f);
json to_json(const Potential& v);
Potential potential_from_json(const json& j);
json to_json(const BandFunction& f);
BandFunction band_function_from_json(const json& j, double band);
json to_json(const MatFunction& m);
MatFunction mat_function_from_json(const json& j);

/// Minimal CSV writer with a fixed header and locale-free number formatting.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<std::string>& cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const;
  /// Row objects keyed by the header, numbers parsed back where possible.
  json to_json() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `content` to `path`, throwing PreconditionError on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace quasispec
