#include "varbesov/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "varbesov/rng.hpp"

namespace varbesov {
namespace {

Eigen::MatrixXd assemble_observation_matrix(const PriorModel& prior, const ForwardOperator& op,
                                            const Observation& obs) {
  const WaveletSpectrumMap map(prior.spec().family, prior.truncation(), op.cutoff());
  const auto& b = map.matrix();
  const auto m = op.multipliers();
  const auto& points = obs.setup().points;
  const auto k_count = static_cast<Eigen::Index>(points.size());
  const auto modes = b.rows();

  // E(i, k) = w_k m_k e^{2 pi i k x_i}, w_0 = 1, w_k = 2; A = Re(E B).
  Eigen::MatrixXcd e(k_count, modes);
  for (Eigen::Index i = 0; i < k_count; ++i) {
    for (Eigen::Index k = 0; k < modes; ++k) {
      const double w = k == 0 ? 1.0 : 2.0;
      e(i, k) = w * m[static_cast<std::size_t>(k)] *
                std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) * points[static_cast<std::size_t>(i)]);
    }
  }
  return (e * b).real();
}

void zero_levels_above(Eigen::MatrixXd& a, int level) {
  const auto keep = static_cast<Eigen::Index>(WaveletCoefficients::count_for_level(level));
  if (keep < a.cols()) a.rightCols(a.cols() - keep).setZero();
}

std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

PosteriorHandle::PosteriorHandle(PriorModel prior, ForwardOperator op, Observation obs, Eigen::VectorXd y)
    : prior_(std::make_shared<const PriorModel>(std::move(prior))),
      op_(std::make_shared<const ForwardOperator>(std::move(op))),
      obs_(std::make_shared<const Observation>(std::move(obs))),
      y_(std::move(y)) {
  if (static_cast<std::size_t>(y_.size()) != obs_->size()) {
    throw std::invalid_argument("PosteriorHandle: data length does not match the observation points");
  }
  auto a = std::make_shared<Eigen::MatrixXd>(assemble_observation_matrix(*prior_, *op_, *obs_));
  wa_ = std::make_shared<const Eigen::MatrixXd>(obs_->whiten(*a));
  a_ = std::move(a);
  wy_ = obs_->whiten(y_);
  active_level_ = prior_->truncation();
}

PosteriorHandle PosteriorHandle::with_data(Eigen::VectorXd y) const {
  if (y.size() != y_.size()) {
    throw std::invalid_argument("PosteriorHandle::with_data: data length mismatch");
  }
  PosteriorHandle out = *this;
  out.y_ = std::move(y);
  out.wy_ = obs_->whiten(out.y_);
  return out;
}

PosteriorHandle PosteriorHandle::truncated(int level) const {
  if (level < 0 || level > prior_->truncation()) {
    throw std::invalid_argument("PosteriorHandle::truncated: level must lie in [0, J]");
  }
  PosteriorHandle out = *this;
  auto a = std::make_shared<Eigen::MatrixXd>(*a_);
  auto wa = std::make_shared<Eigen::MatrixXd>(*wa_);
  zero_levels_above(*a, level);
  zero_levels_above(*wa, level);
  out.a_ = std::move(a);
  out.wa_ = std::move(wa);
  out.active_level_ = std::min(level, active_level_);
  return out;
}

double PosteriorHandle::potential_u(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != dimension()) {
    throw std::invalid_argument("PosteriorHandle: coefficient vector has the wrong length");
  }
  const Eigen::VectorXd r = wy_ - *wa_ * u;
  return 0.5 * r.squaredNorm() - 0.5 * wy_.squaredNorm();
}

double PosteriorHandle::potential(const WaveletCoefficients& coeffs) const {
  const auto u = coeffs.convention() == Convention::U ? coeffs : coeffs.to(Convention::U);
  if (u.max_level() != prior_->truncation()) {
    throw std::invalid_argument("PosteriorHandle: coefficient level does not match the prior truncation");
  }
  return potential_u(Eigen::Map<const Eigen::VectorXd>(u.flat().data(), static_cast<Eigen::Index>(u.size())));
}

double PosteriorHandle::potential_xi(const std::vector<double>& xi) const {
  return potential(prior_->coefficients_from_xi(xi));
}

double PosteriorHandle::potential_direct(const WaveletCoefficients& coeffs) const {
  auto u = coeffs.convention() == Convention::U ? coeffs : coeffs.to(Convention::U);
  u = u.truncated(active_level_);
  const auto spectrum = propagate(u, prior_->spec().family, *op_);
  const Eigen::VectorXd g = observe(spectrum, obs_->setup().points);
  const Eigen::MatrixXd w = obs_->cholesky().inverse();
  return 0.5 * (w * (y_ - g)).squaredNorm() - 0.5 * (w * y_).squaredNorm();
}

std::uint64_t prior_fingerprint(const PriorModel& model) {
  std::uint64_t h = fnv1a("prior");
  const auto& spec = model.spec();
  h = hash_bytes(h, &spec.seed, sizeof spec.seed);
  h = hash_bytes(h, &spec.truncation, sizeof spec.truncation);
  h = hash_bytes(h, model.gammas().data(), model.gammas().size() * sizeof(double));
  for (double x : {0.3, 1.7, 4.1}) {
    const double phi = model.xi_sampler().potential(x);
    h = hash_bytes(h, &phi, sizeof phi);
  }
  return h;
}

PriorEnsemble::PriorEnsemble(const PriorModel& model, std::size_t count)
    : u_(static_cast<Eigen::Index>(model.dimension()), static_cast<Eigen::Index>(count)),
      fingerprint_(varbesov::prior_fingerprint(model)) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto c = model.draw(i).coeffs;
    u_.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(c.flat().data(), static_cast<Eigen::Index>(c.size()));
  }
}

Eigen::VectorXd PriorEnsemble::potentials(const PosteriorHandle& handle) const {
  if (varbesov::prior_fingerprint(handle.prior()) != fingerprint_) {
    throw std::invalid_argument("PriorEnsemble: handle uses a different prior");
  }
  const Eigen::MatrixXd r = (-(handle.whitened_matrix() * u_)).colwise() + handle.whitened_data();
  return 0.5 * r.colwise().squaredNorm().transpose().array() - 0.5 * handle.whitened_data().squaredNorm();
}

ZEstimate estimate_z(const PosteriorHandle& handle, std::size_t sample_count) {
  if (sample_count < 100) {
    throw std::invalid_argument("estimate_z: need at least 100 samples");
  }
  return estimate_z(handle, PriorEnsemble(handle.prior(), sample_count));
}

ZEstimate estimate_z(const PosteriorHandle& handle, const PriorEnsemble& ensemble) {
  const Eigen::VectorXd phi = ensemble.potentials(handle);
  const auto n = static_cast<double>(phi.size());
  // Shift by the smallest potential before exponentiating.
  const double shift = phi.minCoeff();
  const Eigen::ArrayXd w = (-(phi.array() - shift)).exp();
  const double mean = w.mean();
  const double var = (w - mean).square().sum() / (n - 1.0);
  ZEstimate out;
  out.log_z = std::log(mean) - shift;
  out.z = std::exp(out.log_z);
  out.standard_error = std::sqrt(var / n) * std::exp(-shift);
  return out;
}

HellingerEstimate hellinger(const PosteriorHandle& a, const PosteriorHandle& b, std::size_t sample_count) {
  if (prior_fingerprint(a.prior()) != prior_fingerprint(b.prior())) {
    throw std::invalid_argument("hellinger: handles must share the prior");
  }
  return hellinger(a, b, PriorEnsemble(a.prior(), sample_count));
}

HellingerEstimate hellinger(const PosteriorHandle& a, const PosteriorHandle& b, const PriorEnsemble& ensemble) {
  const Eigen::VectorXd phi_a = ensemble.potentials(a);
  const Eigen::VectorXd phi_b = ensemble.potentials(b);
  const auto n = static_cast<double>(phi_a.size());
  if (phi_a.size() < 2) {
    throw std::invalid_argument("hellinger: need at least two samples");
  }
  const Eigen::ArrayXd wa = (-(phi_a.array() - phi_a.minCoeff())).exp();
  const Eigen::ArrayXd wb = (-(phi_b.array() - phi_b.minCoeff())).exp();
  const double ma = wa.mean();
  const double mb = wb.mean();
  const Eigen::ArrayXd diff = (wa / ma).sqrt() - (wb / mb).sqrt();
  HellingerEstimate out;
  out.squared = std::clamp(0.5 * diff.square().mean(), 0.0, 1.0);

  // Delta method on d^2 = 1 - mean(sqrt(w_a w_b)) / sqrt(mean w_a mean w_b).
  // With r = w / mean w the influence of sample i reduces to
  // 1/2 (sqrt(r_a) - sqrt(r_b))^2 - d^2 (r_a + r_b) / 2, which stays
  // accurate when the two posteriors nearly coincide.
  const Eigen::ArrayXd psi = 0.5 * diff.square() - out.squared * 0.5 * (wa / ma + wb / mb);
  const double psi_mean = psi.mean();
  out.squared_standard_error = std::sqrt((psi - psi_mean).square().sum() / (n - 1.0) / n);
  out.distance = std::sqrt(out.squared);
  out.standard_error = out.distance > 0.0 ? out.squared_standard_error / (2.0 * out.distance)
                                          : std::sqrt(out.squared_standard_error);
  return out;
}

std::vector<TruncationRow> truncation_study(const PosteriorHandle& handle, const std::vector<int>& levels,
                                            std::size_t sample_count) {
  const PriorEnsemble ensemble(handle.prior(), sample_count);
  std::vector<TruncationRow> rows;
  for (int level : levels) {
    const auto h = hellinger(handle, handle.truncated(level), ensemble);
    rows.push_back({level, h.distance, h.standard_error});
  }
  return rows;
}

void ChainConfig::validate() const {
  if (steps == 0 || burn_in >= steps) {
    throw std::invalid_argument("ChainConfig: need 0 <= burn_in < steps");
  }
  if (!(proposal_scale > 0.0)) {
    throw std::invalid_argument("ChainConfig: proposal_scale must be positive");
  }
  if (thin == 0) {
    throw std::invalid_argument("ChainConfig: thin must be >= 1");
  }
}

ChainResult run_mcmc(const PosteriorHandle& handle, const ChainConfig& config) {
  config.validate();
  const auto& prior = handle.prior();
  const auto& sampler = prior.xi_sampler();
  const auto& gammas = prior.gammas();
  const auto& wa = handle.whitened_matrix();
  const auto& wy = handle.whitened_data();
  const std::size_t dim = prior.dimension();
  const std::size_t block = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))));

  auto rng = CounterRng::keyed(config.seed, {streams::kMcmc});
  std::normal_distribution<double> normal;

  Eigen::VectorXd xi(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = sampler.draw(rng);
  Eigen::VectorXd gamma_vec = Eigen::Map<const Eigen::VectorXd>(gammas.data(), static_cast<Eigen::Index>(dim));

  auto fit_of = [&](const Eigen::VectorXd& state) -> Eigen::VectorXd {
    return wa * (gamma_vec.array() * state.array()).matrix();
  };
  Eigen::VectorXd fit = fit_of(xi);
  auto phi_of = [&](const Eigen::VectorXd& f) { return 0.5 * (wy - f).squaredNorm() - 0.5 * wy.squaredNorm(); };
  double phi = phi_of(fit);

  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> step(block);

  ChainResult out;
  out.block_size = block;
  const std::size_t kept = (config.steps - config.burn_in + config.thin - 1) / config.thin;
  out.xi.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(dim));
  out.potential.reserve(config.steps);
  out.accepted.reserve(config.steps);

  double log_scale = std::log(config.proposal_scale);
  std::size_t window_accepts = 0;
  std::size_t window_count = 0;
  std::size_t windows = 0;
  std::size_t post_accepts = 0;
  std::size_t row = 0;
  Eigen::VectorXd proposal_fit(fit.size());

  for (std::size_t t = 0; t < config.steps; ++t) {
    // Partial Fisher-Yates picks the block.
    for (std::size_t i = 0; i < block; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, dim - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    const double scale = std::exp(log_scale);
    proposal_fit = fit;
    double log_prior_ratio = 0.0;
    for (std::size_t i = 0; i < block; ++i) {
      const auto p = static_cast<Eigen::Index>(order[i]);
      step[i] = scale * normal(rng);
      const double old_x = xi(p);
      const double new_x = old_x + step[i];
      log_prior_ratio -= 0.5 * (sampler.potential(new_x) - sampler.potential(old_x));
      proposal_fit += wa.col(p) * (gamma_vec(p) * step[i]);
    }
    const double proposal_phi = phi_of(proposal_fit);
    const double log_accept = -(proposal_phi - phi) + log_prior_ratio;
    const bool accept = std::log(rng.uniform()) < log_accept;
    if (accept) {
      for (std::size_t i = 0; i < block; ++i) xi(static_cast<Eigen::Index>(order[i])) += step[i];
      fit = proposal_fit;
      phi = proposal_phi;
    }
    if ((t + 1) % 1024 == 0) {
      fit = fit_of(xi);
      phi = phi_of(fit);
    }
    out.potential.push_back(phi);
    out.accepted.push_back(accept ? 1 : 0);

    if (t < config.burn_in) {
      if (config.adapt) {
        window_accepts += accept ? 1 : 0;
        if (++window_count == 50) {
          ++windows;
          const double rate = static_cast<double>(window_accepts) / 50.0;
          log_scale += (rate - 0.25) / std::sqrt(static_cast<double>(windows));
          window_accepts = 0;
          window_count = 0;
        }
      }
    } else {
      post_accepts += accept ? 1 : 0;
      if ((t - config.burn_in) % config.thin == 0) out.xi.row(static_cast<Eigen::Index>(row++)) = xi.transpose();
    }
  }
  out.acceptance_rate = static_cast<double>(post_accepts) / static_cast<double>(config.steps - config.burn_in);
  out.final_scale = std::exp(log_scale);
  return out;
}

double embedding_lower_bound(const ModularSpec& support, const ModularSpec& x_norm, int probe_level) {
  const ModularEvaluator px(x_norm, probe_level);
  const ModularEvaluator pt(support, probe_level);
  WaveletCoefficients e(probe_level, Convention::Lambda);
  double best = 0.0;
  for (std::size_t p = 0; p < e.size(); ++p) {
    e.flat()[p] = 1.0;
    best = std::max(best, luxemburg_norm(e, px) / luxemburg_norm(e, pt));
    e.flat()[p] = 0.0;
  }
  return best;
}

double delta_threshold(const ModularSpec& support, const ModularSpec& x_norm, int probe_level) {
  const double ce = embedding_lower_bound(support, x_norm, probe_level);
  return 4.0 * std::max(std::pow(ce, support.q.lower_bound()), std::pow(ce, support.q.upper_bound()));
}

AssumptionReport audit_assumption1(const PosteriorHandle& handle, const ModularSpec& x_norm, double radius,
                                   std::size_t trials, std::uint64_t seed) {
  if (trials < 100) {
    throw std::invalid_argument("audit_assumption1: need at least 100 trials");
  }
  if (!(radius >= 0.0)) {
    throw std::invalid_argument("audit_assumption1: radius must be nonnegative");
  }
  const int J = handle.prior().truncation();
  const std::size_t dim = handle.dimension();
  const auto k = static_cast<Eigen::Index>(handle.data().size());
  const ModularEvaluator x_eval(x_norm, J);
  auto rng = CounterRng::keyed(seed, {fnv1a("audit")});
  std::normal_distribution<double> normal;

  auto x_norm_of = [&](const Eigen::VectorXd& u) {
    WaveletCoefficients c(J, Convention::U, std::vector<double>(u.data(), u.data() + u.size()));
    return luxemburg_norm(c.to(Convention::Lambda), x_eval);
  };
  auto random_u = [&]() {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
    const double n = x_norm_of(u);
    return Eigen::VectorXd(u * (radius * rng.uniform() / n));
  };
  auto random_y = [&]() {
    Eigen::VectorXd y(k);
    for (Eigen::Index i = 0; i < k; ++i) y(i) = normal(rng);
    return Eigen::VectorXd(y * (radius * rng.uniform() / y.norm()));
  };

  AssumptionReport report;
  report.trials = trials;
  report.worst_lower_bound_margin = std::numeric_limits<double>::infinity();
  report.upper_bound = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::VectorXd u1 = random_u();
    const Eigen::VectorXd u2 = random_u();
    const Eigen::VectorXd y1 = random_y();
    const Eigen::VectorXd y2 = random_y();
    const auto h1 = handle.with_data(y1);
    const auto h2 = handle.with_data(y2);
    const double p11 = h1.potential_u(u1);
    const double p21 = h1.potential_u(u2);
    const double p12 = h2.potential_u(u1);

    const double margin = p11 - h1.potential_floor();
    report.worst_lower_bound_margin = std::min(report.worst_lower_bound_margin, margin);
    if (margin < -1e-12 * (1.0 + std::abs(h1.potential_floor()))) ++report.lower_bound_violations;
    report.upper_bound = std::max({report.upper_bound, p11, p21, p12});

    const double du = x_norm_of(u1 - u2);
    if (du > 0.0) report.lipschitz_u = std::max(report.lipschitz_u, std::abs(p11 - p21) / du);
    const double dy = (y1 - y2).norm();
    if (dy > 0.0) report.lipschitz_y = std::max(report.lipschitz_y, std::abs(p11 - p12) / dy);
  }

  ModularSpec support = x_norm;
  support.q = handle.prior().spec().q;
  report.embedding_lower_bound = embedding_lower_bound(support, x_norm, std::min(J, 6));
  const auto& q = support.q;
  report.delta_threshold = 4.0 * std::max(std::pow(report.embedding_lower_bound, q.lower_bound()),
                                          std::pow(report.embedding_lower_bound, q.upper_bound()));
  report.delta_warning = handle.prior().spec().delta <= report.delta_threshold;
  return report;
}

}  // namespace varbesov
