// Experiment runner: one subcommand per study, configured by a JSON file
// (comments allowed). Exit status 0 on success, 1 on numeric failure, 2 on
// configuration errors.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "varbesov/experiment.hpp"

namespace {

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool validate_only = false;
};

int report_issues(const std::string& config_path, const std::vector<varbesov::ConfigIssue>& issues) {
  int fatal = 0;
  for (const auto& issue : issues) {
    std::cerr << config_path;
    if (issue.line > 0) std::cerr << ':' << issue.line;
    std::cerr << ": " << (issue.fatal ? "error" : "note") << ": ";
    if (!issue.path.empty()) std::cerr << issue.path << ": ";
    std::cerr << issue.message << '\n';
    if (issue.fatal) ++fatal;
  }
  return fatal;
}

int run(const std::string& subcommand, const RunOptions& opt) {
  std::string text;
  varbesov::Json j;
  try {
    j = varbesov::load_config_file(opt.config, &text);
  } catch (const varbesov::ConfigError& e) {
    std::cerr << opt.config << ": error: " << e.what() << '\n';
    return 2;
  }
  if (opt.seed) j["seed"] = *opt.seed;
  if (report_issues(opt.config, varbesov::validate_config(j, text)) > 0) return 2;
  if (opt.validate_only) {
    std::cout << "config ok\n";
    return 0;
  }

  std::filesystem::path out = opt.out;
  if (out.empty()) out = j.value("output", std::string("varbesov-out")) + "/" + subcommand;
  try {
    const auto config = varbesov::ExperimentConfig::from_json(j, text);
    const auto manifest = varbesov::run_subcommand(subcommand, config, out, opt.threads);
    std::cout << subcommand << ": wrote " << manifest["artifacts"].size() << " artifacts to " << out.string() << '\n';
  } catch (const varbesov::ConfigError& e) {
    std::cerr << opt.config << ": error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-index Besov priors: sampling, forward maps and Bayesian inversion"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string chosen;
  for (const auto& name : varbesov::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", opt.config, "Experiment config (JSON, comments allowed)")->required();
    sub->add_option("-o,--out", opt.out, "Output directory");
    sub->add_option("--seed", opt.seed, "Root seed (overrides the config)");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--validate-only", opt.validate_only, "Check the config and exit");
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* validate = app.add_subcommand("validate", "Check a config without running anything");
  validate->add_option("-c,--config", opt.config, "Experiment config")->required();
  validate->add_option("--seed", opt.seed, "Root seed (overrides the config)");
  validate->callback([&chosen] { chosen = "validate"; });

  CLI11_PARSE(app, argc, argv);
  if (chosen == "validate") opt.validate_only = true;
  return run(chosen, opt);
}
