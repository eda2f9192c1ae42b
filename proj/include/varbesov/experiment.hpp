#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varbesov/forward.hpp"
#include "varbesov/io.hpp"
#include "varbesov/prior.hpp"

namespace varbesov {

inline constexpr int kConfigSchemaVersion = 1;

/// Config problem; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line);
  int line() const { return line_; }

 private:
  int line_;
};

/// JSON with // and /* */ comments. Parse errors become ConfigError with the
/// offending line.
Json parse_config_text(const std::string& text);
Json load_config_file(const std::filesystem::path& path, std::string* text = nullptr);

/// Best-effort source line of a key path such as "prior.s.value" in `text`.
int locate_key(const std::string& text, const std::string& path);

/// Resolved experiment blocks. Missing keys take the documented defaults.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  PriorSpec prior;
  ForwardModel model;
  ObservationSetup observation;
  std::optional<Eigen::VectorXd> data;
  std::uint64_t truth_sample = 1000003;  // prior draw used to simulate data
  Json task = Json::object();

  /// Throws ConfigError naming the key path; the line is filled in when the
  /// source text is given.
  static ExperimentConfig from_json(const Json& j, const std::string& text = "");
  /// Effective configuration with every default spelled out.
  Json to_json() const;
};

struct ConfigIssue {
  std::string path;
  std::string message;
  bool fatal = true;  // false for warnings and reports
  int line = 0;
};

/// Schema and semantic checks without running anything: s- > 0, q- >= 1, the
/// fractional beta > 1/4 gate, the prior's delta against the growth
/// threshold (warning), and the sign of the gap condition when the task
/// carries a comparison index t (report).
std::vector<ConfigIssue> validate_config(const Json& j, const std::string& text = "");

/// FNV-1a over the canonical dump of the effective config.
std::uint64_t config_hash(const ExperimentConfig& config);

const std::vector<std::string>& subcommand_names();

/// Runs one subcommand, writing its artifacts and manifest.json into `out`.
/// Returns the manifest. Numeric failures throw std::runtime_error whose
/// message starts with "<subcommand>: <operation>:".
Json run_subcommand(const std::string& name, const ExperimentConfig& config, const std::filesystem::path& out,
                    unsigned threads = 1);

/// Data used by the posterior subcommands: the config's data if present,
/// otherwise a simulation from prior draw truth_sample with noise keyed by
/// the seed.
Eigen::VectorXd experiment_data(const ExperimentConfig& config);

}  // namespace varbesov
