#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "varbesov/exponent.hpp"
#include "varbesov/wavelet.hpp"

namespace varbesov {

using Json = nlohmann::json;

/// {"shape": "const", "value": v}
/// {"shape": "trig", "c0": c, "cos": [...], "sin": [...]}
/// {"shape": "ramp", "low", "high", "rise_at", "fall_at", "width"}
/// A bare number is accepted as a constant field.
Json exponent_to_json(const ExponentField& field);
ExponentField exponent_from_json(const Json& j);

/// Coefficient header: {"format": "varbesov-coefficients", "version": 1,
/// "max_level", "convention": "lambda"|"u", "family_order", "count"}.
Json coefficient_header(const WaveletCoefficients& coeffs, int family_order);

struct StoredCoefficients {
  WaveletCoefficients coeffs;
  int family_order = 0;
  Json header;
};

/// Binary layout: the 8 bytes "VBCOEF01", a little-endian uint64 header
/// length, the UTF-8 JSON header, then `count` little-endian float64 values in
/// flat order (j ascending, F before M, m ascending). `extra` is merged into
/// the header.
void write_coefficients_binary(const std::filesystem::path& path, const WaveletCoefficients& coeffs,
                               int family_order, const Json& extra = Json::object());
StoredCoefficients read_coefficients_binary(const std::filesystem::path& path);

/// CSV layout: "# " + JSON header on the first line, then
/// position,level,generator,translation,value.
void write_coefficients_csv(const std::filesystem::path& path, const WaveletCoefficients& coeffs,
                            int family_order, const Json& extra = Json::object());
StoredCoefficients read_coefficients_csv(const std::filesystem::path& path);

/// Plain CSV table; values are written with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t columns_;
};

void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace varbesov
