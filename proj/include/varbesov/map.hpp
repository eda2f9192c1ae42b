#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "varbesov/bayes.hpp"
#include "varbesov/modular.hpp"

namespace varbesov {

/// I(u) = Phi(u; y) + 1/2 rho(u), rho the modular of the prior's (s, q).
struct MapProblem {
  explicit MapProblem(PosteriorHandle h) : handle(std::move(h)) {}

  PosteriorHandle handle;
  double epsilon = 1e-6;
  std::size_t max_iterations = 20000;  // per continuation stage
  double gradient_tolerance = 1e-8;
  double continuation_factor = 0.1;
  std::size_t restarts = 3;  // random starts besides u = 0
  std::uint64_t seed = 0;
  std::size_t quadrature_nodes = 16;  // per cell, for the smoothed objective

  void validate() const;
};

/// Objective on flat lambda-convention vectors. The smoothed variant uses a
/// fixed per-cell rule; value() uses the adaptive modular.
class MapObjective {
 public:
  explicit MapObjective(const MapProblem& problem);

  std::size_t dimension() const { return dim_; }
  double value(std::span<const double> lambda) const;
  /// Phi + 1/2 rho_eps with |lambda| -> sqrt(lambda^2 + eps^2); writes the
  /// gradient when `gradient` is non-empty.
  double smoothed(std::span<const double> lambda, double eps, std::span<double> gradient = {}) const;
  /// Diagonal used to scale the first descent step.
  const Eigen::VectorXd& preconditioner() const { return diag_; }

 private:
  std::size_t dim_;
  int max_level_;
  Eigen::VectorXd wy_;
  ModularEvaluator evaluator_;
  Eigen::MatrixXd wad_;  // W A D, D = diag(2^{-j/2})
  Eigen::VectorXd diag_;
};

double objective(const MapProblem& problem, const WaveletCoefficients& coeffs);

struct MapSolution {
  WaveletCoefficients coeffs;  // lambda convention
  double i_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> epsilon_schedule;
  std::vector<double> stage_values;  // smoothed objective at the end of each stage
  std::vector<double> start_values;  // final I for each start, zero start first
};

/// L-BFGS directions with Armijo backtracking (halving) on the smoothed
/// objective, epsilon-continuation, and multi-start; the best start wins.
/// Hitting max_iterations leaves converged = false.
MapSolution solve_map(const MapProblem& problem);

struct MinimizingReport {
  std::size_t perturbations = 0;
  std::size_t violations = 0;
  double worst_decrease = 0.0;  // max of I(u) - I(u + h), <= 0 if none
  std::vector<double> improving_direction;
  double improving_scale = 0.0;
  double smoothing_bias_bound = 0.0;
};

/// Evaluates I on u + h d for `perturbation_count` random unit directions d
/// and h in {1e-1, 1e-2, 1e-3, 1e-4}; a violation is a decrease by more than
/// gradient_tolerance.
MinimizingReport verify_minimizing_sequence(const MapProblem& problem, const MapSolution& solution,
                                            std::size_t perturbation_count = 100, std::uint64_t seed = 0);

}  // namespace varbesov
