#include "varbesov/map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include "varbesov/rng.hpp"

namespace varbesov {
namespace {

ModularSpec modular_of(const MapProblem& problem) {
  ModularSpec spec;
  spec.s = problem.handle.prior().spec().s;
  spec.q = problem.handle.prior().spec().q;
  spec.quadrature_nodes_per_cell = problem.quadrature_nodes;
  return spec;
}

using Vec = Eigen::VectorXd;

struct StageResult {
  Vec x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// One continuation stage: L-BFGS two-loop directions, Armijo halving.
StageResult descend(const MapObjective& f, Vec x, double eps, const MapProblem& problem) {
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  const auto n = x.size();
  Vec g(n);
  auto eval = [&](const Vec& at, Vec& grad) {
    return f.smoothed(std::span<const double>(at.data(), static_cast<std::size_t>(n)), eps,
                      std::span<double>(grad.data(), static_cast<std::size_t>(n)));
  };
  double fx = eval(x, g);
  const Vec h0 = f.preconditioner().cwiseInverse();
  std::deque<std::pair<Vec, Vec>> memory;
  StageResult out;
  Vec trial(n);
  Vec g_trial(n);
  std::size_t flat_steps = 0;

  for (std::size_t it = 0; it < problem.max_iterations; ++it) {
    if (g.norm() < problem.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Vec d = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(d) / y.dot(s);
      d -= alpha[i] * y;
    }
    if (memory.empty()) {
      d = d.cwiseProduct(h0);
    } else {
      const auto& [s, y] = memory.back();
      d *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[i] - beta) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g.cwiseProduct(h0);
      slope = g.dot(d);
    }

    double t = 1.0;
    double ft = 0.0;
    bool moved = false;
    while (t > 1e-20) {
      trial = x + t * d;
      ft = eval(trial, g_trial);
      if (ft <= fx + kArmijo * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!moved) {
      if (memory.empty()) break;  // stalled even on the scaled gradient
      memory.clear();
      continue;
    }
    Vec s = trial - x;
    Vec y = g_trial - g;
    if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (memory.size() > kMemory) memory.pop_front();
    }
    // Leave the stage once the objective has stopped moving in double.
    flat_steps = fx - ft <= 1e-15 * std::max(1.0, std::abs(fx)) ? flat_steps + 1 : 0;
    x = trial;
    g = g_trial;
    fx = ft;
    if (flat_steps >= 25) break;
  }
  if (!out.converged && g.norm() < problem.gradient_tolerance) out.converged = true;
  out.x = std::move(x);
  out.value = fx;
  return out;
}

struct StartResult {
  Vec x;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> stage_values;
  double value = 0.0;
};

StartResult run_start(const MapObjective& f, Vec x, const MapProblem& problem,
                      const std::vector<double>& schedule) {
  StartResult out;
  for (double eps : schedule) {
    auto stage = descend(f, std::move(x), eps, problem);
    x = std::move(stage.x);
    out.iterations += stage.iterations;
    out.converged = stage.converged;
    out.stage_values.push_back(stage.value);
  }
  out.value = f.value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  out.x = std::move(x);
  return out;
}

}  // namespace

void MapProblem::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("MapProblem: epsilon must be positive");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("MapProblem: gradient_tolerance must be positive");
  if (!(continuation_factor > 0.0 && continuation_factor < 1.0)) {
    throw std::invalid_argument("MapProblem: continuation_factor must lie in (0, 1)");
  }
  if (max_iterations == 0) throw std::invalid_argument("MapProblem: max_iterations must be >= 1");
  if (quadrature_nodes == 0) throw std::invalid_argument("MapProblem: quadrature_nodes must be >= 1");
}

MapObjective::MapObjective(const MapProblem& problem)
    : dim_(problem.handle.dimension()),
      max_level_(problem.handle.prior().truncation()),
      wy_(problem.handle.whitened_data()),
      evaluator_(modular_of(problem), problem.handle.prior().truncation()) {
  problem.validate();
  Vec d(static_cast<Eigen::Index>(dim_));
  for (std::size_t p = 0; p < dim_; ++p) {
    d(static_cast<Eigen::Index>(p)) = std::exp2(-0.5 * WaveletCoefficients::level_of(p));
  }
  wad_ = problem.handle.whitened_matrix() * d.asDiagonal();

  // Data curvature plus the modular's gradient at lambda = 1, a per-entry
  // scale of its weight.
  const std::vector<double> ones(dim_, 1.0);
  std::vector<double> weight(dim_);
  evaluator_.smoothed(ones, 0.0, weight);
  diag_ = wad_.colwise().squaredNorm().transpose();
  for (std::size_t p = 0; p < dim_; ++p) diag_(static_cast<Eigen::Index>(p)) += std::max(weight[p], 1e-12);
}

double MapObjective::value(std::span<const double> lambda) const {
  WaveletCoefficients c(max_level_, Convention::Lambda, std::vector<double>(lambda.begin(), lambda.end()));
  const Eigen::Map<const Vec> x(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  const Vec r = wy_ - wad_ * x;
  return 0.5 * r.squaredNorm() - 0.5 * wy_.squaredNorm() + 0.5 * evaluator_.value(c);
}

double MapObjective::smoothed(std::span<const double> lambda, double eps, std::span<double> gradient) const {
  if (lambda.size() != dim_) throw std::invalid_argument("MapObjective: wrong coefficient count");
  const Eigen::Map<const Vec> x(lambda.data(), static_cast<Eigen::Index>(dim_));
  const Vec r = wy_ - wad_ * x;
  const double rho = evaluator_.smoothed(lambda, eps, gradient);
  if (!gradient.empty()) {
    Eigen::Map<Vec> g(gradient.data(), static_cast<Eigen::Index>(dim_));
    g = 0.5 * g - wad_.transpose() * r;
  }
  return 0.5 * r.squaredNorm() - 0.5 * wy_.squaredNorm() + 0.5 * rho;
}

double objective(const MapProblem& problem, const WaveletCoefficients& coeffs) {
  const auto lambda = coeffs.convention() == Convention::Lambda ? coeffs : coeffs.to(Convention::Lambda);
  if (lambda.max_level() != problem.handle.prior().truncation()) {
    throw std::invalid_argument("objective: coefficient level does not match the prior truncation");
  }
  const auto u = lambda.to(Convention::U);
  ModularSpec spec = modular_of(problem);
  return problem.handle.potential(u) + 0.5 * modular_value(lambda, spec);
}

MapSolution solve_map(const MapProblem& problem) {
  problem.validate();
  const MapObjective f(problem);
  const auto n = static_cast<Eigen::Index>(f.dimension());
  const int J = problem.handle.prior().truncation();

  std::vector<double> schedule;
  for (double eps = problem.epsilon; eps >= 1e-10 * (1.0 - 1e-12); eps *= problem.continuation_factor) {
    schedule.push_back(eps);
  }
  if (schedule.empty()) schedule.push_back(problem.epsilon);

  std::vector<Vec> starts{Vec::Zero(n)};
  for (std::size_t r = 0; r < problem.restarts; ++r) {
    const auto u = problem.handle.prior().draw(r + 1).coeffs.to(Convention::Lambda);
    Vec x(n);
    for (Eigen::Index p = 0; p < n; ++p) x(p) = u.flat()[static_cast<std::size_t>(p)];
    // Keep random starts within reach of the zero start.
    x *= 1.0 / std::max(1.0, std::sqrt(f.preconditioner().maxCoeff()));
    starts.push_back(std::move(x));
  }

  std::vector<std::future<StartResult>> jobs;
  for (auto& x : starts) {
    jobs.push_back(std::async(std::launch::async, [&f, &problem, &schedule, x]() mutable {
      return run_start(f, std::move(x), problem, schedule);
    }));
  }
  std::vector<StartResult> results;
  for (auto& job : jobs) results.push_back(job.get());

  MapSolution out;
  out.epsilon_schedule = schedule;
  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.start_values.push_back(results[i].value);
    if (results[i].value < results[best].value) best = i;
  }
  auto& winner = results[best];
  out.coeffs = WaveletCoefficients(J, Convention::Lambda, std::vector<double>(winner.x.data(), winner.x.data() + n));
  out.i_value = winner.value;
  out.iterations = winner.iterations;
  out.converged = winner.converged;
  out.stage_values = winner.stage_values;
  return out;
}

MinimizingReport verify_minimizing_sequence(const MapProblem& problem, const MapSolution& solution,
                                            std::size_t perturbation_count, std::uint64_t seed) {
  const MapObjective f(problem);
  const auto lambda = solution.coeffs.convention() == Convention::Lambda ? solution.coeffs
                                                                        : solution.coeffs.to(Convention::Lambda);
  const std::size_t n = f.dimension();
  if (lambda.size() != n) {
    throw std::invalid_argument("verify_minimizing_sequence: solution does not match the problem");
  }
  const std::vector<double> base(lambda.flat().begin(), lambda.flat().end());
  const double i0 = f.value(base);

  auto rng = CounterRng::keyed(seed, {fnv1a("verify")});
  std::normal_distribution<double> normal;
  MinimizingReport report;
  report.worst_decrease = -std::numeric_limits<double>::infinity();
  std::vector<double> d(n);
  std::vector<double> trial(n);
  for (std::size_t k = 0; k < perturbation_count; ++k) {
    double norm = 0.0;
    for (double& v : d) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : d) v /= norm;
    for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
      for (std::size_t p = 0; p < n; ++p) trial[p] = base[p] + h * d[p];
      const double decrease = i0 - f.value(trial);
      ++report.perturbations;
      if (decrease > report.worst_decrease) {
        report.worst_decrease = decrease;
        if (decrease > problem.gradient_tolerance) {
          report.improving_direction = d;
          report.improving_scale = h;
        }
      }
      if (decrease > problem.gradient_tolerance) ++report.violations;
    }
  }
  const double eps = solution.epsilon_schedule.empty() ? problem.epsilon : solution.epsilon_schedule.back();
  report.smoothing_bias_bound = eps * static_cast<double>(n);
  return report;
}

}  // namespace varbesov
