#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "varbesov/exponent.hpp"
#include "varbesov/modular.hpp"
#include "varbesov/rng.hpp"
#include "varbesov/wavelet.hpp"

namespace varbesov {

/// One quadrature pair of the probability measure kappa on the torus.
struct KappaNode {
  double point = 0.0;
  double weight = 0.0;
};

/// n equal-weight nodes at i/n.
std::vector<KappaNode> uniform_kappa(std::size_t n = 64);

struct PriorSpec {
  ExponentField s = ExponentField::constant(1.0);
  ExponentField q = ExponentField::constant(2.0);
  double delta = 1.0;
  std::vector<KappaNode> kappa_nodes = uniform_kappa();
  int truncation = 6;
  WaveletFamily family{};
  std::uint64_t seed = 0;

  void validate() const;
};

/// gamma^j_m = 2^{-j (s(2^-j m) + 1/2 - 1/q+)} delta^{-1/q+}; the level-0
/// scaling generator uses j = 0.
double prior_gamma(int level, std::size_t translation, const PriorSpec& spec);

/// Rejection sampler for the density proportional to
/// exp(-1/2 sum_i w_i |x|^{q(y_i)}).
class XiSampler {
 public:
  XiSampler(const ExponentField& q, const std::vector<KappaNode>& kappa);

  double potential(double x) const;
  double draw(CounterRng& rng) const;

  /// Proposal iterations allowed per draw before giving up.
  static constexpr std::size_t kMaxIterations = 1000000;

 private:
  std::vector<double> q_;
  std::vector<double> w_;
  double q_low_;
  double center_probability_;
};

std::vector<double> sample_xi(const XiSampler& sampler, std::size_t count, CounterRng& rng);

struct PriorSample {
  WaveletCoefficients coeffs;  // u convention
  std::vector<double> xi;
  int truncation = 0;
};

/// A validated spec with the scalings gamma precomputed. Draw number k of a
/// model is a pure function of (seed, k): coefficient p uses its own
/// counter-keyed stream, so truncations share their low-level draws.
class PriorModel {
 public:
  explicit PriorModel(PriorSpec spec);

  const PriorSpec& spec() const { return spec_; }
  int truncation() const { return spec_.truncation; }
  std::size_t dimension() const { return gamma_.size(); }
  const std::vector<double>& gammas() const { return gamma_; }
  const XiSampler& xi_sampler() const { return sampler_; }

  std::vector<double> draw_xi(std::uint64_t sample_index) const;
  WaveletCoefficients coefficients_from_xi(const std::vector<double>& xi) const;
  PriorSample draw(std::uint64_t sample_index) const;

 private:
  PriorSpec spec_;
  std::vector<double> gamma_;
  XiSampler sampler_;
};

PriorSample sample_prior(const PriorSpec& spec, std::uint64_t sample_index = 0);

/// Monte Carlo estimate of E[exp(alpha rho_t(u^J))] over draws 0..count-1.
/// Overflow yields an infinite mean.
MeanEstimate fernique_exp_moment(const PriorModel& model, const ExponentField& t, double alpha,
                                 std::size_t sample_count);

/// Monte Carlo estimate of E[rho_t(u^J)].
MeanEstimate prior_modular_mean(const PriorModel& model, const ExponentField& t, std::size_t sample_count);

/// inf s > n (b + 1/q+ + theta (a - b) / 2).
bool hoelder_condition(const ExponentField& s, const ExponentField& q, const HoelderBudget& budget,
                       int dimension = 1);

struct KolmogorovSums {
  double s1 = 0.0;
  double s2 = 0.0;
  std::vector<double> s1_levels;
  std::vector<double> s2_levels;
};

/// Partial sums up to `level` of S1 = sum gamma^2 |Psi|_inf^2 and
/// S2 = sum |gamma Psi|_inf^{2-theta} (gamma 2^{j a})^theta with measured
/// sup norms.
KolmogorovSums kolmogorov_sums(const PriorSpec& spec, const HoelderBudget& budget, int level);

/// Least-squares slope of log2 max_x |u(x+h) - u(x)| against log2 h over
/// h = 2^-r, r = 2..J+1. +infinity when every increment vanishes.
double empirical_hoelder_exponent(const WaveletCoefficients& coeffs, const WaveletFamily& family,
                                  std::size_t grid);

}  // namespace varbesov
