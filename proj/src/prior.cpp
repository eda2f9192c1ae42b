#include "varbesov/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace varbesov {

std::vector<KappaNode> uniform_kappa(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_kappa: need at least one node");
  }
  std::vector<KappaNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {static_cast<double>(i) / static_cast<double>(n), 1.0 / static_cast<double>(n)};
  }
  return nodes;
}

void PriorSpec::validate() const {
  if (!(s.lower_bound() > 0.0)) {
    throw std::invalid_argument("PriorSpec: s- must be positive (got " + std::to_string(s.lower_bound()) + ")");
  }
  require_integrability_exponent(q);
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("PriorSpec: delta must be positive and finite");
  }
  if (truncation < 0 || truncation > 24) {
    throw std::invalid_argument("PriorSpec: truncation level must lie in [0, 24]");
  }
  if (kappa_nodes.empty()) {
    throw std::invalid_argument("PriorSpec: kappa needs at least one node");
  }
  double total = 0.0;
  for (const auto& node : kappa_nodes) {
    if (!(node.weight >= 0.0)) {
      throw std::invalid_argument("PriorSpec: kappa weights must be nonnegative");
    }
    total += node.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("PriorSpec: kappa weights must sum to 1 (sum = " + std::to_string(total) + ")");
  }
}

double prior_gamma(int level, std::size_t translation, const PriorSpec& spec) {
  if (translation >= (std::size_t{1} << level)) {
    throw std::invalid_argument("prior_gamma: translation out of range");
  }
  const double q_plus = spec.q.upper_bound();
  const double s = spec.s(std::ldexp(static_cast<double>(translation), -level));
  return std::exp2(-level * (s + 0.5 - 1.0 / q_plus)) * std::pow(spec.delta, -1.0 / q_plus);
}

XiSampler::XiSampler(const ExponentField& q, const std::vector<KappaNode>& kappa) : q_low_(q.lower_bound()) {
  require_integrability_exponent(q);
  for (const auto& node : kappa) {
    if (node.weight == 0.0) continue;
    q_.push_back(q(node.point));
    w_.push_back(node.weight);
  }
  // Envelope: 1 on (-1, 1), exp(-|x|^p / 2) outside. The two tails carry
  // 2 * 2^{1/p} / p * Gamma(1/p, 1/2).
  const double p = q_low_;
  const double tails = 2.0 * std::pow(2.0, 1.0 / p) / p * boost::math::tgamma(1.0 / p, 0.5);
  center_probability_ = 2.0 / (2.0 + tails);
}

double XiSampler::potential(double x) const {
  const double a = std::abs(x);
  if (a == 0.0) return 0.0;
  const double log_a = std::log(a);
  double phi = 0.0;
  for (std::size_t i = 0; i < q_.size(); ++i) phi += w_[i] * std::exp(q_[i] * log_a);
  return phi;
}

double XiSampler::draw(CounterRng& rng) const {
  std::gamma_distribution<double> gamma(1.0 / q_low_, 1.0);
  std::size_t iter = 0;
  while (iter++ < kMaxIterations) {
    double x;
    double log_envelope = 0.0;
    if (rng.uniform() < center_probability_) {
      x = 2.0 * rng.uniform() - 1.0;
    } else {
      // The tail branch must yield a tail point, or the mixture weights shift.
      double r = std::pow(2.0 * gamma(rng), 1.0 / q_low_);
      while (r < 1.0 && iter++ < kMaxIterations) r = std::pow(2.0 * gamma(rng), 1.0 / q_low_);
      if (r < 1.0) break;
      x = rng.uniform() < 0.5 ? -r : r;
      log_envelope = -0.5 * std::pow(r, q_low_);
    }
    const double log_accept = -0.5 * potential(x) - log_envelope;
    if (std::log(rng.uniform()) < log_accept) return x;
  }
  throw std::runtime_error("XiSampler: rejection loop exceeded its iteration cap; check the exponent q");
}

std::vector<double> sample_xi(const XiSampler& sampler, std::size_t count, CounterRng& rng) {
  std::vector<double> out(count);
  for (double& x : out) x = sampler.draw(rng);
  return out;
}

PriorModel::PriorModel(PriorSpec spec)
    : spec_((spec.validate(), std::move(spec))), sampler_(spec_.q, spec_.kappa_nodes) {
  const std::size_t count = WaveletCoefficients::count_for_level(spec_.truncation);
  gamma_.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const auto idx = WaveletCoefficients::index_of(p);
    gamma_[p] = prior_gamma(idx.level, idx.translation, spec_);
  }
}

std::vector<double> PriorModel::draw_xi(std::uint64_t sample_index) const {
  std::vector<double> xi(gamma_.size());
  for (std::size_t p = 0; p < xi.size(); ++p) {
    auto rng = CounterRng::keyed(spec_.seed, {streams::kPrior, sample_index, p});
    xi[p] = sampler_.draw(rng);
  }
  return xi;
}

WaveletCoefficients PriorModel::coefficients_from_xi(const std::vector<double>& xi) const {
  if (xi.size() != gamma_.size()) {
    throw std::invalid_argument("PriorModel: xi has the wrong length");
  }
  std::vector<double> u(xi.size());
  for (std::size_t p = 0; p < u.size(); ++p) u[p] = gamma_[p] * xi[p];
  return WaveletCoefficients(spec_.truncation, Convention::U, std::move(u));
}

PriorSample PriorModel::draw(std::uint64_t sample_index) const {
  PriorSample sample;
  sample.xi = draw_xi(sample_index);
  sample.coeffs = coefficients_from_xi(sample.xi);
  sample.truncation = spec_.truncation;
  return sample;
}

PriorSample sample_prior(const PriorSpec& spec, std::uint64_t sample_index) {
  return PriorModel(spec).draw(sample_index);
}

namespace {

ModularSpec t_modular(const PriorModel& model, const ExponentField& t) {
  ModularSpec spec;
  spec.s = t;
  spec.q = model.spec().q;
  return spec;
}

}  // namespace

MeanEstimate fernique_exp_moment(const PriorModel& model, const ExponentField& t, double alpha,
                                 std::size_t sample_count) {
  if (!(alpha >= 0.0)) {
    throw std::invalid_argument("fernique_exp_moment: alpha must be nonnegative");
  }
  const ModularEvaluator eval(t_modular(model, t), model.truncation());
  return mean_estimate(
      [&](std::size_t i) {
        if (alpha == 0.0) return 1.0;
        const auto lambda = model.draw(i).coeffs.to(Convention::Lambda);
        return std::exp(alpha * eval.value(lambda));
      },
      sample_count);
}

MeanEstimate prior_modular_mean(const PriorModel& model, const ExponentField& t, std::size_t sample_count) {
  const ModularEvaluator eval(t_modular(model, t), model.truncation());
  return mean_estimate([&](std::size_t i) { return eval.value(model.draw(i).coeffs.to(Convention::Lambda)); },
                       sample_count);
}

bool hoelder_condition(const ExponentField& s, const ExponentField& q, const HoelderBudget& budget,
                       int dimension) {
  budget.validate();
  const double rhs =
      dimension * (budget.b + 1.0 / q.upper_bound() + 0.5 * budget.theta * (budget.a - budget.b));
  return s.lower_bound() > rhs;
}

KolmogorovSums kolmogorov_sums(const PriorSpec& spec, const HoelderBudget& budget, int level) {
  spec.validate();
  budget.validate();
  KolmogorovSums out;
  const double theta = budget.theta;
  for (int j = 0; j <= level; ++j) {
    double s1 = 0.0;
    double s2 = 0.0;
    const double sup_m = basis_sup_norm(j, Generator::M, spec.family);
    auto add = [&](double gamma, double sup) {
      s1 += gamma * gamma * sup * sup;
      s2 += std::pow(gamma * sup, 2.0 - theta) * std::pow(gamma * std::exp2(j * budget.a), theta);
    };
    if (j == 0) add(prior_gamma(0, 0, spec), basis_sup_norm(0, Generator::F, spec.family));
    for (std::size_t m = 0; m < (std::size_t{1} << j); ++m) add(prior_gamma(j, m, spec), sup_m);
    out.s1_levels.push_back(s1);
    out.s2_levels.push_back(s2);
    out.s1 += s1;
    out.s2 += s2;
  }
  return out;
}

double empirical_hoelder_exponent(const WaveletCoefficients& coeffs, const WaveletFamily& family,
                                  std::size_t grid) {
  const int J = coeffs.max_level();
  if ((grid & (grid - 1)) != 0 || grid < (std::size_t{1} << (J + 3))) {
    throw std::invalid_argument("empirical_hoelder_exponent: grid must be a power of two >= 2^{J+3}");
  }
  const auto u = coeffs.convention() == Convention::U ? coeffs : coeffs.to(Convention::U);
  const auto f = synthesize(u, family, grid);

  // Increments at rounding level count as zero.
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  const double floor = 1e-13 * scale;

  std::vector<double> xs;
  std::vector<double> ys;
  for (int r = 2; r <= J + 1; ++r) {
    const std::size_t step = grid >> r;
    double worst = 0.0;
    for (std::size_t i = 0; i < grid; ++i) worst = std::max(worst, std::abs(f[(i + step) % grid] - f[i]));
    if (worst > floor) {
      xs.push_back(-static_cast<double>(r));
      ys.push_back(std::log2(worst));
    }
  }
  if (xs.empty()) return std::numeric_limits<double>::infinity();
  if (xs.size() == 1) {
    throw std::invalid_argument("empirical_hoelder_exponent: need at least two resolved lags (J >= 2)");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace varbesov
