#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "varbesov/forward.hpp"
#include "varbesov/modular.hpp"
#include "varbesov/prior.hpp"

namespace varbesov {

/// Posterior mu^y with dmu^y/dmu_0 proportional to exp(-Phi(u; y)) for
/// Phi(u; y) = 1/2 |W(y - A u)|^2 - 1/2 |W y|^2, where A = l o G restricted
/// to the truncated coefficient vector and W = L^{-1} whitens the noise.
///
/// The observation matrix A (K x P) is assembled once from the exact Fourier
/// transforms of the basis; handles built with with_data() or truncated()
/// share it.
class PosteriorHandle {
 public:
  PosteriorHandle(PriorModel prior, ForwardOperator op, Observation obs, Eigen::VectorXd y);

  const PriorModel& prior() const { return *prior_; }
  const ForwardOperator& forward() const { return *op_; }
  const Observation& observation() const { return *obs_; }
  const Eigen::VectorXd& data() const { return y_; }
  std::size_t dimension() const { return prior_->dimension(); }
  /// Highest wavelet level fed to the forward map (the prior truncation
  /// unless truncated() lowered it).
  int active_level() const { return active_level_; }

  /// A and W A, columns indexed by flat coefficient position (u convention).
  const Eigen::MatrixXd& observation_matrix() const { return *a_; }
  const Eigen::MatrixXd& whitened_matrix() const { return *wa_; }
  const Eigen::VectorXd& whitened_data() const { return wy_; }

  PosteriorHandle with_data(Eigen::VectorXd y) const;
  /// Phi^N: inputs are cut to wavelet levels <= level before propagation.
  PosteriorHandle truncated(int level) const;

  double potential(const WaveletCoefficients& coeffs) const;
  double potential_u(const Eigen::VectorXd& u) const;
  double potential_xi(const std::vector<double>& xi) const;
  /// Same value through spectrum propagation and pointwise observation,
  /// with an explicit inverse Cholesky factor; for consistency checks.
  double potential_direct(const WaveletCoefficients& coeffs) const;

  /// -1/2 |W y|^2, the infimum of Phi over u.
  double potential_floor() const { return -0.5 * wy_.squaredNorm(); }

 private:
  PosteriorHandle() = default;

  std::shared_ptr<const PriorModel> prior_;
  std::shared_ptr<const ForwardOperator> op_;
  std::shared_ptr<const Observation> obs_;
  std::shared_ptr<const Eigen::MatrixXd> a_;
  std::shared_ptr<const Eigen::MatrixXd> wa_;
  Eigen::VectorXd y_;
  Eigen::VectorXd wy_;
  int active_level_ = 0;
};

/// Prior draws 0..count-1 of a model, kept as columns (u convention) so
/// potentials of many handles can be evaluated on common random numbers.
class PriorEnsemble {
 public:
  PriorEnsemble(const PriorModel& model, std::size_t count);

  std::size_t size() const { return static_cast<std::size_t>(u_.cols()); }
  const Eigen::MatrixXd& coefficients() const { return u_; }
  std::uint64_t prior_fingerprint() const { return fingerprint_; }

  /// Phi(u_i; y) for every member.
  Eigen::VectorXd potentials(const PosteriorHandle& handle) const;

 private:
  Eigen::MatrixXd u_;
  std::uint64_t fingerprint_;
};

/// Hash of everything that determines the prior draws.
std::uint64_t prior_fingerprint(const PriorModel& model);

struct ZEstimate {
  double z = 0.0;
  double standard_error = 0.0;
  double log_z = 0.0;
};

/// Mean of exp(-Phi) over prior draws.
ZEstimate estimate_z(const PosteriorHandle& handle, std::size_t sample_count);
ZEstimate estimate_z(const PosteriorHandle& handle, const PriorEnsemble& ensemble);

struct HellingerEstimate {
  double distance = 0.0;
  double standard_error = 0.0;
  double squared = 0.0;
  double squared_standard_error = 0.0;
};

/// d^2 = 1 - E[e^{-Phi_a/2 - Phi_b/2}] / sqrt(Z_a Z_b) over common prior draws,
/// evaluated as 1/2 mean((sqrt(w_a) - sqrt(w_b))^2) with self-normalized
/// weights so that identical handles give exactly 0 and swapping the
/// arguments gives the same value. Delta-method standard error.
HellingerEstimate hellinger(const PosteriorHandle& a, const PosteriorHandle& b, std::size_t sample_count);
HellingerEstimate hellinger(const PosteriorHandle& a, const PosteriorHandle& b, const PriorEnsemble& ensemble);

struct TruncationRow {
  int level = 0;
  double distance = 0.0;
  double standard_error = 0.0;
};

std::vector<TruncationRow> truncation_study(const PosteriorHandle& handle, const std::vector<int>& levels,
                                            std::size_t sample_count);

struct ChainConfig {
  std::size_t steps = 10000;
  std::size_t burn_in = 1000;
  double proposal_scale = 0.5;
  std::uint64_t seed = 0;
  bool adapt = true;
  std::size_t thin = 1;

  void validate() const;
};

struct ChainResult {
  /// Post-burn-in states of xi, one row per kept step.
  Eigen::MatrixXd xi;
  std::vector<double> potential;  // Phi at every step
  std::vector<std::uint8_t> accepted;
  double acceptance_rate = 0.0;  // post-burn-in
  double final_scale = 0.0;
  std::size_t block_size = 0;
};

/// Random-walk Metropolis on xi with target
/// exp(-Phi(gamma xi; y)) prod_i exp(-phi(xi_i) / 2); each step perturbs
/// ceil(sqrt(P)) random coordinates. With adapt, the scale is tuned toward
/// acceptance 0.25 during burn-in only.
ChainResult run_mcmc(const PosteriorHandle& handle, const ChainConfig& config);

struct AssumptionReport {
  std::size_t trials = 0;
  std::size_t lower_bound_violations = 0;
  double worst_lower_bound_margin = 0.0;  // min over trials of Phi + |Wy|^2/2
  double upper_bound = 0.0;               // K(r)
  double lipschitz_u = 0.0;               // L(r)
  double lipschitz_y = 0.0;
  double embedding_lower_bound = 0.0;     // lower bound on c_e
  double delta_threshold = 0.0;           // 4 max(c_e^{q-}, c_e^{q+})
  bool delta_warning = false;
};

/// Lower bound on the embedding constant c_e in ||u||_X <= c_e ||u||_{B^t_q}:
/// the largest norm ratio over single basis functions up to `probe_level`.
double embedding_lower_bound(const ModularSpec& support, const ModularSpec& x_norm, int probe_level = 6);

/// delta* = 2 max(c_e^{q-}, c_e^{q+}) (alpha_1 + 2 alpha_2) with alpha_1 = 0,
/// alpha_2 = 1 (Gaussian-noise potential) and c_e from embedding_lower_bound.
double delta_threshold(const ModularSpec& support, const ModularSpec& x_norm, int probe_level = 6);

/// Empirical check of the potential's bounds and local Lipschitz constants
/// over |y| <= r and ||u||_X <= r, X the Luxemburg space of `x_norm`. The
/// delta check uses the support space B^t_q with t = x_norm.s and the
/// prior's q.
AssumptionReport audit_assumption1(const PosteriorHandle& handle, const ModularSpec& x_norm, double radius,
                                   std::size_t trials, std::uint64_t seed);

}  // namespace varbesov
