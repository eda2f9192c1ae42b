#include "varbesov/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <array>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>

#include "varbesov/bayes.hpp"
#include "varbesov/map.hpp"
#include "varbesov/modular.hpp"
#include "varbesov/rng.hpp"

#ifndef VARBESOV_VERSION
#define VARBESOV_VERSION "0.0.0"
#endif

namespace varbesov {
namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

[[noreturn]] void config_fail(const std::string& path, const std::string& message, const std::string& text) {
  const int line = text.empty() ? 0 : locate_key(text, path);
  throw ConfigError(path + ": " + message, line);
}

// Typed read of j[key] under `path` with a default for missing keys.
template <class T>
T read(const Json& j, const std::string& key, const T& fallback, const std::string& path, const std::string& text) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    config_fail(path.empty() ? key : path + "." + key, e.what(), text);
  }
}

ExponentField read_field(const Json& j, const std::string& key, const ExponentField& fallback,
                         const std::string& path, const std::string& text) {
  if (!j.contains(key)) return fallback;
  try {
    return exponent_from_json(j.at(key));
  } catch (const std::exception& e) {
    config_fail(path + "." + key, e.what(), text);
  }
}

const Json& block(const Json& j, const std::string& key, const std::string& text) {
  static const Json empty = Json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) config_fail(key, "must be an object", text);
  return j.at(key);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Deterministic parallel loop: item i always lands in slot i.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Runs `fn`, prefixing any exception with the operation name.
template <class F>
auto step(const std::string& subcommand, const std::string& operation, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(subcommand + ": " + operation + ": " + e.what());
  }
}

ModularSpec default_x_norm(const ExperimentConfig& config) {
  ModularSpec x;
  if (config.task.contains("t")) {
    x.s = exponent_from_json(config.task.at("t"));
  } else {
    // Largest constant index with a strictly negative gap, minus a margin.
    x.s = ExponentField::constant(config.prior.s.lower_bound() - 1.0 / config.prior.q.upper_bound() - 0.1);
  }
  x.q = config.prior.q;
  return x;
}

PosteriorHandle build_handle(const ExperimentConfig& config) {
  return PosteriorHandle(PriorModel(config.prior), ForwardOperator(config.model), Observation(config.observation),
                         experiment_data(config));
}

Eigen::VectorXd vector_from(const WaveletCoefficients& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.flat().data(), static_cast<Eigen::Index>(c.size()));
}

struct RunContext {
  std::string name;
  const ExperimentConfig& config;
  std::filesystem::path out;
  unsigned threads;
  std::vector<std::string> artifacts;

  std::filesystem::path file(const std::string& f) {
    artifacts.push_back(f);
    return out / f;
  }
  template <class F>
  auto op(const std::string& operation, F&& fn) {
    return step(name, operation, std::forward<F>(fn));
  }
};

void run_sample_prior(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto count = cfg.task.value("samples", std::size_t{10});
  const auto format = cfg.task.value("format", std::string("binary"));
  if (format != "binary" && format != "csv" && format != "both") {
    throw ConfigError("task.format: expected binary, csv or both", 0);
  }
  ModularSpec diag;
  diag.s = cfg.task.contains("t") ? exponent_from_json(cfg.task.at("t")) : cfg.prior.s;
  diag.q = cfg.prior.q;
  const PriorModel model = ctx.op("PriorModel", [&] { return PriorModel(cfg.prior); });
  const ModularEvaluator evaluator(diag, model.truncation());
  const Json extra = {{"seed", cfg.seed}, {"spec_hash", hex64(config_hash(cfg))}};

  std::vector<WaveletCoefficients> samples(count);
  std::vector<std::vector<double>> levels(count);
  std::vector<std::array<double, 3>> stats(count);
  ctx.op("sample_prior", [&] {
    parallel_for(count, ctx.threads, [&](std::size_t i) {
      samples[i] = model.draw(i).coeffs;
      const auto lambda = samples[i].to(Convention::Lambda);
      levels[i] = evaluator.level_contributions(lambda);
      double total = 0.0;
      for (double v : levels[i]) total += v;
      stats[i] = {total, luxemburg_norm(lambda, evaluator), vector_from(samples[i]).norm()};
    });
    return 0;
  });
  for (std::size_t i = 0; i < count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%04zu", i);
    Json meta = extra;
    meta["sample"] = i;
    if (format != "csv") write_coefficients_binary(ctx.file(std::string(stem) + ".bin"), samples[i],
                                                   cfg.prior.family.order(), meta);
    if (format != "binary") write_coefficients_csv(ctx.file(std::string(stem) + ".csv"), samples[i],
                                                   cfg.prior.family.order(), meta);
  }
  CsvWriter diagnostics(ctx.file("diagnostics.csv"), {"sample", "modular", "luxemburg_norm", "l2_norm"});
  CsvWriter per_level(ctx.file("levels.csv"), {"sample", "level", "contribution"});
  for (std::size_t i = 0; i < count; ++i) {
    diagnostics.row({static_cast<double>(i), stats[i][0], stats[i][1], stats[i][2]});
    for (std::size_t j = 0; j < levels[i].size(); ++j) {
      per_level.row({static_cast<double>(i), static_cast<double>(j), levels[i][j]});
    }
  }
}

void run_fernique(RunContext& ctx) {
  const auto& cfg = ctx.config;
  if (!cfg.task.contains("t")) throw ConfigError("task.t: fernique-test needs a comparison index t", 0);
  const auto t = exponent_from_json(cfg.task.at("t"));
  const double alpha = cfg.task.value("alpha", cfg.prior.delta / 4.0);
  const auto levels = cfg.task.value("levels", std::vector<int>{8, 10});
  const auto count = cfg.task.value("samples", std::size_t{1000});
  const double gap = gap_condition(t, cfg.prior.s, cfg.prior.q);

  CsvWriter table(ctx.file("fernique.csv"), {"level", "exp_moment", "exp_stderr", "modular_mean", "modular_stderr",
                                             "growth", "diverging"});
  double previous = 0.0;
  bool any_divergence = false;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    PriorSpec spec = cfg.prior;
    spec.truncation = levels[i];
    const PriorModel model = ctx.op("PriorModel", [&] { return PriorModel(spec); });
    const auto moment = ctx.op("fernique_exp_moment", [&] { return fernique_exp_moment(model, t, alpha, count); });
    const auto mean = ctx.op("prior_modular_mean", [&] { return prior_modular_mean(model, t, count); });
    const double growth = i == 0 ? std::numeric_limits<double>::quiet_NaN() : mean.mean / previous;
    const bool diverging = i > 0 && growth >= 2.0;
    any_divergence = any_divergence || diverging;
    table.row({static_cast<double>(levels[i]), moment.mean, moment.standard_error, mean.mean, mean.standard_error,
               growth, diverging ? 1.0 : 0.0});
    previous = mean.mean;
  }
  const std::string verdict = gap < 0.0 ? "finite" : (gap > 0.0 ? "divergent" : "inconclusive");
  write_json(ctx.file("fernique.json"),
             {{"gap_condition", gap}, {"predicted", verdict}, {"alpha", alpha}, {"growth_flagged", any_divergence}});
}

void run_hoelder(RunContext& ctx) {
  const auto& cfg = ctx.config;
  HoelderBudget budget;
  budget.b = cfg.task.value("b", budget.b);
  budget.a = cfg.task.value("a", budget.a);
  budget.alpha = cfg.task.value("alpha", budget.alpha);
  budget.theta = cfg.task.value("theta", budget.theta);
  budget.validate();
  const auto count = cfg.task.value("samples", std::size_t{100});
  const std::size_t min_grid = std::size_t{1} << (cfg.prior.truncation + 3);
  const auto grid = cfg.task.value("grid", std::max<std::size_t>(8192, min_grid));
  const double margin = cfg.task.value("margin", 0.15);

  const PriorModel model = ctx.op("PriorModel", [&] { return PriorModel(cfg.prior); });
  std::vector<double> slopes(count);
  ctx.op("empirical_hoelder_exponent", [&] {
    parallel_for(count, ctx.threads, [&](std::size_t i) {
      slopes[i] = empirical_hoelder_exponent(model.draw(i).coeffs, cfg.prior.family, grid);
    });
    return 0;
  });
  const double threshold = budget.alpha * budget.theta / 2.0;
  std::size_t above = 0;
  CsvWriter table(ctx.file("hoelder.csv"), {"sample", "exponent"});
  for (std::size_t i = 0; i < count; ++i) {
    table.row({static_cast<double>(i), slopes[i]});
    if (slopes[i] >= threshold - margin) ++above;
  }
  const auto sums = ctx.op("kolmogorov_sums", [&] { return kolmogorov_sums(cfg.prior, budget, cfg.prior.truncation); });
  write_json(ctx.file("hoelder.json"), {{"condition", hoelder_condition(cfg.prior.s, cfg.prior.q, budget)},
                                        {"threshold", threshold},
                                        {"margin", margin},
                                        {"samples_above", above},
                                        {"samples", count},
                                        {"kolmogorov_s1", sums.s1},
                                        {"kolmogorov_s2", sums.s2}});
}

void run_forward(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto grid = cfg.task.value("grid", std::size_t{256});
  const auto index = cfg.task.value("sample", cfg.truth_sample);
  const ForwardOperator op = ctx.op("ForwardOperator", [&] { return ForwardOperator(cfg.model); });
  const auto u = PriorModel(cfg.prior).draw(index).coeffs;
  const auto input = ctx.op("synthesize", [&] { return synthesize(u, cfg.prior.family, grid); });
  const auto output = ctx.op("propagate", [&] { return propagate(input, op); });
  CsvWriter table(ctx.file("forward.csv"), {"x", "input", "output"});
  for (std::size_t i = 0; i < grid; ++i) {
    table.row({static_cast<double>(i) / static_cast<double>(grid), input[i], output[i]});
  }
  const auto spectrum = ctx.op("propagate", [&] { return propagate(u, cfg.prior.family, op); });
  const auto values = observe(spectrum, cfg.observation.points);
  CsvWriter obs(ctx.file("observations.csv"), {"point", "value"});
  for (std::size_t i = 0; i < cfg.observation.points.size(); ++i) {
    obs.row({cfg.observation.points[i], values(static_cast<Eigen::Index>(i))});
  }
}

void run_simulate(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto replicates = cfg.task.value("replicates", std::size_t{1});
  const ForwardOperator op = ctx.op("ForwardOperator", [&] { return ForwardOperator(cfg.model); });
  const Observation obs = ctx.op("Observation", [&] { return Observation(cfg.observation); });
  const auto u = PriorModel(cfg.prior).draw(cfg.truth_sample).coeffs;
  const auto truth = propagate(u, cfg.prior.family, op);
  const Spectrum source = WaveletSpectrumMap(cfg.prior.family, u.max_level(), op.cutoff()).apply(u);
  const auto clean = observe(truth, cfg.observation.points);
  CsvWriter table(ctx.file("data.csv"), {"replicate", "point", "clean", "value"});
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto y = simulate_data(source, op, obs, cfg.seed, r);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      table.row({static_cast<double>(r), cfg.observation.points[static_cast<std::size_t>(i)], clean(i), y(i)});
    }
  }
  write_coefficients_binary(ctx.file("truth.bin"), u, cfg.prior.family.order(),
                            {{"seed", cfg.seed}, {"sample", cfg.truth_sample}});
}

void run_map(RunContext& ctx) {
  const auto& cfg = ctx.config;
  MapProblem problem(ctx.op("PosteriorHandle", [&] { return build_handle(cfg); }));
  problem.epsilon = cfg.task.value("epsilon", problem.epsilon);
  problem.max_iterations = cfg.task.value("max_iterations", problem.max_iterations);
  problem.gradient_tolerance = cfg.task.value("gradient_tolerance", problem.gradient_tolerance);
  problem.continuation_factor = cfg.task.value("continuation_factor", problem.continuation_factor);
  problem.restarts = cfg.task.value("restarts", problem.restarts);
  problem.quadrature_nodes = cfg.task.value("quadrature_nodes", problem.quadrature_nodes);
  problem.seed = cfg.seed;
  const auto perturbations = cfg.task.value("perturbations", std::size_t{100});
  const auto sol = ctx.op("solve_map", [&] { return solve_map(problem); });
  const auto check = ctx.op("verify_minimizing_sequence",
                            [&] { return verify_minimizing_sequence(problem, sol, perturbations, cfg.seed); });
  write_coefficients_binary(ctx.file("map_solution.bin"), sol.coeffs, cfg.prior.family.order(), {{"seed", cfg.seed}});
  write_json(ctx.file("map_report.json"), {{"I_value", sol.i_value},
                                           {"iterations", sol.iterations},
                                           {"converged", sol.converged},
                                           {"epsilon_schedule", sol.epsilon_schedule},
                                           {"stage_values", sol.stage_values},
                                           {"start_values", sol.start_values},
                                           {"violations",
                                            {{"perturbations", check.perturbations},
                                             {"count", check.violations},
                                             {"worst_decrease", check.worst_decrease},
                                             {"improving_scale", check.improving_scale},
                                             {"improving_direction", check.improving_direction},
                                             {"smoothing_bias_bound", check.smoothing_bias_bound}}}});
}

void run_mcmc_cmd(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto handle = ctx.op("PosteriorHandle", [&] { return build_handle(cfg); });
  ChainConfig chain;
  chain.steps = cfg.task.value("steps", chain.steps);
  chain.burn_in = cfg.task.value("burn_in", chain.burn_in);
  chain.proposal_scale = cfg.task.value("proposal_scale", chain.proposal_scale);
  chain.adapt = cfg.task.value("adapt", chain.adapt);
  chain.thin = cfg.task.value("thin", chain.thin);
  chain.seed = cfg.seed;
  auto traces = cfg.task.value("traces", std::vector<std::size_t>{0, 1, 2});
  std::erase_if(traces, [&](std::size_t p) { return p >= handle.dimension(); });
  const auto result = ctx.op("run_mcmc", [&] { return run_mcmc(handle, chain); });

  CsvWriter trace(ctx.file("trace.csv"), {"step", "phi", "accepted"});
  for (std::size_t t = 0; t < result.potential.size(); ++t) {
    trace.row({static_cast<double>(t), result.potential[t], static_cast<double>(result.accepted[t])});
  }
  std::vector<std::string> columns{"step", "phi", "accepted"};
  for (auto p : traces) columns.push_back("xi_" + std::to_string(p));
  CsvWriter states(ctx.file("chain.csv"), columns);
  for (Eigen::Index r = 0; r < result.xi.rows(); ++r) {
    const std::size_t t = chain.burn_in + static_cast<std::size_t>(r) * chain.thin;
    std::vector<double> row{static_cast<double>(t), result.potential[t], static_cast<double>(result.accepted[t])};
    for (auto p : traces) row.push_back(result.xi(r, static_cast<Eigen::Index>(p)));
    states.row(row);
  }
  write_json(ctx.file("mcmc.json"), {{"acceptance_rate", result.acceptance_rate},
                                     {"final_scale", result.final_scale},
                                     {"block_size", result.block_size},
                                     {"kept", result.xi.rows()}});
}

void run_hellinger_cmd(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto handle = ctx.op("PosteriorHandle", [&] { return build_handle(cfg); });
  const auto count = cfg.task.value("samples", std::size_t{10000});
  const auto index = cfg.task.value("index", std::size_t{0});
  const auto epsilons = cfg.task.value("epsilons", std::vector<double>{0.1, 0.05, 0.025});
  if (index >= static_cast<std::size_t>(handle.data().size())) throw ConfigError("task.index: outside the observation vector", 0);
  const PriorEnsemble ensemble = ctx.op("PriorEnsemble", [&] { return PriorEnsemble(handle.prior(), count); });
  CsvWriter table(ctx.file("hellinger.csv"), {"epsilon", "hellinger", "stderr", "ratio"});
  const auto self = hellinger(handle, handle, ensemble);
  table.row({0.0, self.distance, self.standard_error, 0.0});
  for (double eps : epsilons) {
    Eigen::VectorXd y = handle.data();
    y(static_cast<Eigen::Index>(index)) += eps;
    const auto d = ctx.op("hellinger", [&] { return hellinger(handle, handle.with_data(y), ensemble); });
    table.row({eps, d.distance, d.standard_error, d.distance / eps});
  }
}

void run_truncation(RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto handle = ctx.op("PosteriorHandle", [&] { return build_handle(cfg); });
  std::vector<int> fallback;
  for (int n = 0; n < cfg.prior.truncation; ++n) fallback.push_back(n);
  const auto levels = cfg.task.value("levels", fallback);
  const auto count = cfg.task.value("samples", std::size_t{10000});
  const auto rows = ctx.op("truncation_study", [&] { return truncation_study(handle, levels, count); });
  CsvWriter table(ctx.file("truncation.csv"), {"N", "hellinger", "stderr"});
  for (const auto& r : rows) table.row({static_cast<double>(r.level), r.distance, r.standard_error});
}

const std::vector<std::pair<std::string, void (*)(RunContext&)>>& registry() {
  static const std::vector<std::pair<std::string, void (*)(RunContext&)>> r = {
      {"sample-prior", run_sample_prior}, {"fernique-test", run_fernique},   {"hoelder-test", run_hoelder},
      {"forward", run_forward},           {"simulate-data", run_simulate},   {"map", run_map},
      {"mcmc", run_mcmc_cmd},             {"hellinger", run_hellinger_cmd}, {"truncation-study", run_truncation},
  };
  return r;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

Json load_config_file(const std::filesystem::path& path, std::string* text) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string(), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string content = buffer.str();
  Json j = parse_config_text(content);
  if (text) *text = std::move(content);
  return j;
}

int locate_key(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  std::stringstream parts(path);
  std::string key;
  while (std::getline(parts, key, '.')) {
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + key.size() + 2;
  }
  return found == std::string::npos ? 0 : line_of_offset(text, found);
}

ExperimentConfig ExperimentConfig::from_json(const Json& j, const std::string& text) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object", 1);
  static const std::vector<std::string> known = {"schema_version", "seed", "prior", "model",
                                                 "observation",    "task", "output"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) config_fail(key, "unknown key", text);
  }
  ExperimentConfig c;
  if (!j.contains("schema_version")) throw ConfigError("schema_version: missing", 1);
  c.schema_version = read<int>(j, "schema_version", 0, "", text);
  if (c.schema_version != kConfigSchemaVersion) {
    config_fail("schema_version", "unsupported version " + std::to_string(c.schema_version), text);
  }
  c.seed = read<std::uint64_t>(j, "seed", 0, "", text);

  const Json& p = block(j, "prior", text);
  c.prior.s = read_field(p, "s", ExponentField::constant(1.5), "prior", text);
  c.prior.q = read_field(p, "q", ExponentField::constant(2.0), "prior", text);
  c.prior.delta = read<double>(p, "delta", 1.0, "prior", text);
  c.prior.truncation = read<int>(p, "truncation", 6, "prior", text);
  c.prior.family = WaveletFamily(read<int>(p, "wavelet_order", 4, "prior", text));
  c.prior.kappa_nodes = uniform_kappa(read<std::size_t>(p, "kappa_nodes", 64, "prior", text));
  c.prior.seed = c.seed;

  const Json& m = block(j, "model", text);
  const auto kind = read<std::string>(m, "kind", "heat", "model", text);
  const double time = read<double>(m, "time", 0.01, "model", text);
  const auto cutoff = read<std::size_t>(m, "cutoff_modes", 64, "model", text);
  if (kind == "heat") {
    c.model = ForwardModel::heat(time, cutoff);
  } else if (kind == "fractional") {
    if (!m.contains("alpha") || !m.contains("beta")) config_fail("model", "fractional needs alpha and beta", text);
    c.model = ForwardModel::fractional(read<double>(m, "alpha", 1.0, "model", text),
                                       read<double>(m, "beta", 1.0, "model", text), time, cutoff);
  } else {
    config_fail("model.kind", "expected heat or fractional", text);
  }

  const Json& o = block(j, "observation", text);
  std::vector<double> points;
  if (o.contains("points")) {
    points = read<std::vector<double>>(o, "points", {}, "observation", text);
  } else {
    const auto count = read<std::size_t>(o, "count", 8, "observation", text);
    const double offset = read<double>(o, "offset", 0.5, "observation", text);
    points = ObservationSetup::equispaced(count, 1.0, offset).points;
  }
  if (o.contains("covariance")) {
    const auto rows = read<std::vector<std::vector<double>>>(o, "covariance", {}, "observation", text);
    c.observation.points = points;
    c.observation.gamma.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size()) config_fail("observation.covariance", "must be square", text);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        c.observation.gamma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
      }
    }
  } else {
    c.observation = ObservationSetup::diagonal(points, read<double>(o, "variance", 0.01, "observation", text));
  }
  if (o.contains("data")) {
    const auto d = read<std::vector<double>>(o, "data", {}, "observation", text);
    if (d.size() != points.size()) config_fail("observation.data", "length must match the points", text);
    c.data = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
  }
  c.truth_sample = read<std::uint64_t>(o, "truth_sample", c.truth_sample, "observation", text);
  c.task = j.value("task", Json::object());
  if (!c.task.is_object()) config_fail("task", "must be an object", text);
  return c;
}

Json ExperimentConfig::to_json() const {
  Json prior_json = {{"s", exponent_to_json(prior.s)},
                     {"q", exponent_to_json(prior.q)},
                     {"delta", prior.delta},
                     {"truncation", prior.truncation},
                     {"wavelet_order", prior.family.order()},
                     {"kappa_nodes", prior.kappa_nodes.size()}};
  Json model_json = {{"kind", model.kind == ForwardKind::Heat ? "heat" : "fractional"},
                     {"time", model.time},
                     {"cutoff_modes", model.cutoff_modes}};
  if (model.kind == ForwardKind::Fractional) {
    model_json["alpha"] = model.alpha;
    model_json["beta"] = model.beta;
  }
  std::vector<std::vector<double>> cov(observation.points.size(), std::vector<double>(observation.points.size()));
  for (std::size_t r = 0; r < cov.size(); ++r) {
    for (std::size_t k = 0; k < cov.size(); ++k) {
      cov[r][k] = observation.gamma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    }
  }
  Json obs_json = {{"points", observation.points}, {"covariance", cov}, {"truth_sample", truth_sample}};
  if (data) obs_json["data"] = std::vector<double>(data->data(), data->data() + data->size());
  return {{"schema_version", schema_version}, {"seed", seed},          {"prior", prior_json},
          {"model", model_json},              {"observation", obs_json}, {"task", task}};
}

std::vector<ConfigIssue> validate_config(const Json& j, const std::string& text) {
  std::vector<ConfigIssue> issues;
  auto add = [&](const std::string& path, const std::string& message, bool fatal) {
    issues.push_back({path, message, fatal, text.empty() ? 0 : locate_key(text, path)});
  };
  ExperimentConfig c;
  try {
    c = ExperimentConfig::from_json(j, text);
  } catch (const ConfigError& e) {
    issues.push_back({"", e.what(), true, e.line()});
    return issues;
  } catch (const std::exception& e) {
    add("", e.what(), true);
    return issues;
  }

  bool prior_ok = true;
  if (!(c.prior.s.lower_bound() > 0.0)) {
    add("prior.s", "PriorSpec invariant s- > 0 violated (s- = " + std::to_string(c.prior.s.lower_bound()) + ")", true);
    prior_ok = false;
  }
  if (!(c.prior.q.lower_bound() >= 1.0)) {
    add("prior.q", "PriorSpec invariant q- >= 1 violated (q- = " + std::to_string(c.prior.q.lower_bound()) + ")",
        true);
    prior_ok = false;
  }
  if (prior_ok) {
    try {
      c.prior.validate();
    } catch (const std::exception& e) {
      add("prior", e.what(), true);
      prior_ok = false;
    }
  }
  if (c.model.kind == ForwardKind::Fractional && !(c.model.beta > 0.25)) {
    add("model.beta",
        "beta = " + std::to_string(c.model.beta) + " violates the smoothing gate beta > n/4 = 0.25 (n = 1)", true);
  } else {
    try {
      c.model.validate();
    } catch (const std::exception& e) {
      add("model", e.what(), true);
    }
  }
  try {
    c.observation.validate();
  } catch (const std::exception& e) {
    add("observation", e.what(), true);
  }
  if (!prior_ok) return issues;

  const ModularSpec x = default_x_norm(c);
  const double gap = gap_condition(x.s, c.prior.s, c.prior.q);
  if (c.task.contains("t")) {
    const std::string sign = gap < 0.0 ? "negative: exp-moment finite" : (gap > 0.0 ? "positive: divergent"
                                                                                      : "zero: inconclusive");
    add("task.t", "gap_condition = " + std::to_string(gap) + " (" + sign + ")", false);
  }
  const double threshold = delta_threshold(x, x, std::min(c.prior.truncation, 4));
  if (c.prior.delta <= threshold) {
    add("prior.delta",
        "delta = " + std::to_string(c.prior.delta) + " <= delta* lower bound " + std::to_string(threshold) +
            " (posterior well-posedness not guaranteed)",
        false);
  }
  return issues;
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(config.to_json().dump()); }

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

Eigen::VectorXd experiment_data(const ExperimentConfig& config) {
  if (config.data) return *config.data;
  const ForwardOperator op(config.model);
  const Observation obs(config.observation);
  const auto u = PriorModel(config.prior).draw(config.truth_sample).coeffs;
  const Spectrum source = WaveletSpectrumMap(config.prior.family, u.max_level(), op.cutoff()).apply(u);
  return simulate_data(source, op, obs, config.seed);
}

Json run_subcommand(const std::string& name, const ExperimentConfig& config, const std::filesystem::path& out,
                    unsigned threads) {
  const auto& reg = registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& e) { return e.first == name; });
  if (it == reg.end()) throw std::invalid_argument("unknown subcommand \"" + name + "\"");
  std::filesystem::create_directories(out);
  RunContext ctx{name, config, out, threads, {}};
  it->second(ctx);

  std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
  Json versions = Json::object();
  versions["varbesov"] = VARBESOV_VERSION;
  versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  versions["boost"] = BOOST_LIB_VERSION;
  versions["fftw"] = std::string(fftw_version);
  Json manifest = Json::object();
  manifest["subcommand"] = name;
  manifest["schema_version"] = kConfigSchemaVersion;
  manifest["config_hash"] = hex64(config_hash(config));
  manifest["seed"] = config.seed;
  manifest["config"] = config.to_json();
  manifest["artifacts"] = ctx.artifacts;
  manifest["versions"] = versions;
  write_json(out / "manifest.json", manifest);
  return manifest;
}

}  // namespace varbesov
