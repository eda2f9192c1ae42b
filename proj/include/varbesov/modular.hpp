#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "varbesov/exponent.hpp"
#include "varbesov/wavelet.hpp"

namespace varbesov {

struct ModularSpec {
  ExponentField s = ExponentField::constant(1.0);
  ExponentField q = ExponentField::constant(2.0);
  std::size_t quadrature_nodes_per_cell = 4;
  double target_tolerance = 1e-8;

  void validate() const;
};

/// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre_unit(std::size_t n);

/// rho(lambda) = sum_{j,G,m} int_{Q_jm} 2^{j q(x) s(2^-j m)} |lambda^j_Gm|^{q(x)} dx.
///
/// Holds the per-level tables (q at the quadrature nodes of every dyadic
/// cell) for one spec and one maximal level, so repeated evaluations on
/// coefficient sets of that shape do not touch the exponent fields again.
class ModularEvaluator {
 public:
  ModularEvaluator(ModularSpec spec, int max_level);

  const ModularSpec& spec() const { return spec_; }
  int max_level() const { return max_level_; }

  /// Adaptive value: per-cell rule doubled from quadrature_nodes_per_cell
  /// until two successive totals differ by < target_tolerance * max(1, rho)
  /// (at most 64 nodes). Coefficients must be in the lambda convention.
  double value(const WaveletCoefficients& coeffs) const;

  /// Contribution of each level 0..J (same rule as value()).
  std::vector<double> level_contributions(const WaveletCoefficients& coeffs) const;

  /// Fixed-rule value of the smoothed modular, |lambda| replaced by
  /// sqrt(lambda^2 + eps^2) (eps = 0 gives the modular itself). Writes the
  /// gradient with respect to the flat lambda vector when `gradient` is
  /// non-empty.
  double smoothed(std::span<const double> lambda, double eps, std::span<double> gradient = {}) const;

  /// Fixed-rule value at a given node count, mainly for convergence checks.
  double value_with_nodes(std::span<const double> lambda, std::size_t nodes) const;

 private:
  struct Table {
    QuadratureRule rule;
    std::vector<std::vector<double>> q;  // per level, cell-major, nodes contiguous
  };
  const Table& table(std::size_t nodes) const;
  double accumulate(std::span<const double> lambda, double eps, std::size_t nodes, std::span<double> gradient,
                    std::vector<double>* per_level) const;

  ModularSpec spec_;
  int max_level_;
  bool constant_q_;
  std::vector<double> left_s_;  // s(2^-j m) in flat order
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

double modular_value(const WaveletCoefficients& coeffs, const ModularSpec& spec);

/// inf{mu > 0 : rho(u / mu) <= 1}, bracketed by factors of 4 from
/// rho^{1/q-} and bisected to relative width 1e-10.
double luxemburg_norm(const WaveletCoefficients& coeffs, const ModularSpec& spec);
double luxemburg_norm(const WaveletCoefficients& coeffs, const ModularEvaluator& evaluator);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean and standard error of a scalar over draws 0..count-1.
MeanEstimate mean_estimate(const std::function<double(std::size_t)>& draw, std::size_t count);

/// Monte Carlo estimate of E[rho(u)] from a stream of lambda-convention draws.
MeanEstimate expectation_modular_estimate(const std::function<WaveletCoefficients(std::size_t)>& sampler,
                                          const ModularSpec& spec, std::size_t sample_count);

}  // namespace varbesov
