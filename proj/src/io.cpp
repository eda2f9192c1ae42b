#include "varbesov/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varbesov {
namespace {

constexpr char kMagic[8] = {'V', 'B', 'C', 'O', 'E', 'F', '0', '1'};

static_assert(std::endian::native == std::endian::little, "binary coefficient I/O assumes a little-endian host");

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

StoredCoefficients from_header(const Json& header, std::vector<double> values) {
  if (header.value("format", "") != "varbesov-coefficients") {
    throw std::runtime_error("not a varbesov coefficient file");
  }
  const int level = header.at("max_level").get<int>();
  const auto conv = header.at("convention").get<std::string>() == "u" ? Convention::U : Convention::Lambda;
  if (values.size() != header.at("count").get<std::size_t>()) {
    throw std::runtime_error("coefficient count does not match the header");
  }
  return {WaveletCoefficients(level, conv, std::move(values)), header.at("family_order").get<int>(), header};
}

}  // namespace

Json exponent_to_json(const ExponentField& field) {
  return std::visit(
      [](const auto& shape) -> Json {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          return {{"shape", "const"}, {"value", shape.value}};
        } else if constexpr (std::is_same_v<T, TrigShape>) {
          return {{"shape", "trig"}, {"c0", shape.c0}, {"cos", shape.cos_coeffs}, {"sin", shape.sin_coeffs}};
        } else {
          return {{"shape", "ramp"},       {"low", shape.low},         {"high", shape.high},
                  {"rise_at", shape.rise_at}, {"fall_at", shape.fall_at}, {"width", shape.width}};
        }
      },
      field.shape());
}

ExponentField exponent_from_json(const Json& j) {
  if (j.is_number()) return ExponentField::constant(j.get<double>());
  if (!j.is_object() || !j.contains("shape")) {
    throw std::invalid_argument("exponent field must be a number or an object with a \"shape\" key");
  }
  const auto shape = j.at("shape").get<std::string>();
  if (shape == "const") return ExponentField::constant(j.at("value").get<double>());
  if (shape == "trig") {
    return ExponentField::trig(j.at("c0").get<double>(), j.value("cos", std::vector<double>{}),
                               j.value("sin", std::vector<double>{}));
  }
  if (shape == "ramp") {
    return ExponentField::ramp(j.at("low").get<double>(), j.at("high").get<double>(), j.value("rise_at", 0.25),
                               j.value("fall_at", 0.75), j.value("width", 0.1));
  }
  throw std::invalid_argument("unknown exponent shape \"" + shape + "\"");
}

Json coefficient_header(const WaveletCoefficients& coeffs, int family_order) {
  return {{"format", "varbesov-coefficients"},
          {"version", 1},
          {"max_level", coeffs.max_level()},
          {"convention", coeffs.convention() == Convention::U ? "u" : "lambda"},
          {"family_order", family_order},
          {"count", coeffs.size()}};
}

void write_coefficients_binary(const std::filesystem::path& path, const WaveletCoefficients& coeffs,
                               int family_order, const Json& extra) {
  Json header = extra;
  header.update(coefficient_header(coeffs, family_order));
  const std::string text = header.dump();
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(coeffs.flat().data()),
            static_cast<std::streamsize>(coeffs.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

StoredCoefficients read_coefficients_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error(path.string() + ": bad magic");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || length > (1u << 24)) throw std::runtime_error(path.string() + ": bad header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const Json header = Json::parse(text);
  std::vector<double> values(header.at("count").get<std::size_t>());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated payload");
  return from_header(header, std::move(values));
}

void write_coefficients_csv(const std::filesystem::path& path, const WaveletCoefficients& coeffs, int family_order,
                            const Json& extra) {
  Json header = extra;
  header.update(coefficient_header(coeffs, family_order));
  auto out = open_out(path);
  out << "# " << header.dump() << "\nposition,level,generator,translation,value\n";
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    const auto idx = WaveletCoefficients::index_of(p);
    out << p << ',' << idx.level << ',' << (idx.generator == Generator::F ? 'F' : 'M') << ',' << idx.translation
        << ',' << format_double(coeffs.flat()[p]) << '\n';
  }
}

StoredCoefficients read_coefficients_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# ", 0) != 0) throw std::runtime_error(path.string() + ": missing JSON header line");
  const Json header = Json::parse(line.substr(2));
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return from_header(header, std::move(values));
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : impl_(std::make_unique<Impl>(Impl{open_out(path)})), columns_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) impl_->out << (i ? "," : "") << columns[i];
  impl_->out << '\n';
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::invalid_argument("CsvWriter: row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) impl_->out << (i ? "," : "") << format_double(values[i]);
  impl_->out << '\n';
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace varbesov
