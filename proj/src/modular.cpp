#include "varbesov/modular.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/legendre.hpp>

namespace varbesov {

void ModularSpec::validate() const {
  require_integrability_exponent(q);
  if (quadrature_nodes_per_cell < 1) {
    throw std::invalid_argument("ModularSpec: quadrature_nodes_per_cell must be >= 1");
  }
  if (!(target_tolerance > 0.0)) {
    throw std::invalid_argument("ModularSpec: target_tolerance must be positive");
  }
}

QuadratureRule gauss_legendre_unit(std::size_t n) {
  if (n < 1) {
    throw std::invalid_argument("gauss_legendre_unit: n must be >= 1");
  }
  const int order = static_cast<int>(n);
  // Nonnegative zeros of P_n, ascending; mirror them for the full set.
  const auto half = boost::math::legendre_p_zeros<double>(order);
  std::vector<double> zeros;
  for (auto it = half.rbegin(); it != half.rend(); ++it) {
    if (*it != 0.0) zeros.push_back(-*it);
  }
  zeros.insert(zeros.end(), half.begin(), half.end());

  QuadratureRule rule;
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime(order, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes.push_back(0.5 * (x + 1.0));
    rule.weights.push_back(0.5 * w);
  }
  return rule;
}

struct ModularEvaluator::Cache {
  std::mutex mutex;
  std::map<std::size_t, std::unique_ptr<Table>> tables;
};

ModularEvaluator::ModularEvaluator(ModularSpec spec, int max_level)
    : spec_(std::move(spec)), max_level_(max_level), cache_(std::make_shared<Cache>()) {
  spec_.validate();
  if (max_level < 0) {
    throw std::invalid_argument("ModularEvaluator: max_level must be >= 0");
  }
  constant_q_ = std::holds_alternative<ConstantShape>(spec_.q.shape());
  const std::size_t count = WaveletCoefficients::count_for_level(max_level);
  left_s_.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const auto idx = WaveletCoefficients::index_of(p);
    left_s_[p] = spec_.s(std::ldexp(static_cast<double>(idx.translation), -idx.level));
  }
}

const ModularEvaluator::Table& ModularEvaluator::table(std::size_t nodes) const {
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->tables[nodes];
  if (!slot) {
    auto t = std::make_unique<Table>();
    t->rule = gauss_legendre_unit(nodes);
    t->q.resize(static_cast<std::size_t>(max_level_) + 1);
    for (int j = 0; j <= max_level_; ++j) {
      const std::size_t cells = std::size_t{1} << j;
      auto& q = t->q[static_cast<std::size_t>(j)];
      q.resize(cells * nodes);
      const double h = std::ldexp(1.0, -j);
      for (std::size_t m = 0; m < cells; ++m) {
        for (std::size_t k = 0; k < nodes; ++k) {
          q[m * nodes + k] = spec_.q(h * (static_cast<double>(m) + t->rule.nodes[k]));
        }
      }
    }
    slot = std::move(t);
  }
  return *slot;
}

double ModularEvaluator::accumulate(std::span<const double> lambda, double eps, std::size_t nodes,
                                    std::span<double> gradient, std::vector<double>* per_level) const {
  if (lambda.size() != left_s_.size()) {
    throw std::invalid_argument("ModularEvaluator: coefficient count does not match max_level");
  }
  const bool want_grad = !gradient.empty();
  if (want_grad && gradient.size() != lambda.size()) {
    throw std::invalid_argument("ModularEvaluator: gradient size mismatch");
  }
  if (per_level) per_level->assign(static_cast<std::size_t>(max_level_) + 1, 0.0);

  const double ln2 = std::numbers::ln2;
  const double eps2 = eps * eps;
  const Table* tab = constant_q_ ? nullptr : &table(nodes);
  const double qc = constant_q_ ? std::get<ConstantShape>(spec_.q.shape()).value : 0.0;

  double total = 0.0;
  for (std::size_t p = 0; p < lambda.size(); ++p) {
    const int j = WaveletCoefficients::level_of(p);
    const double a2 = lambda[p] * lambda[p] + eps2;
    double contrib = 0.0;
    double dcontrib = 0.0;
    if (a2 > 0.0) {
      const double log_a = 0.5 * std::log(a2);
      const double base = j * left_s_[p] * ln2 + log_a;
      if (constant_q_) {
        const double v = std::exp(qc * base - j * ln2);
        contrib = v;
        dcontrib = qc * v / a2;
      } else {
        const std::size_t m = p == 0 ? 0 : p - (std::size_t{1} << j);
        const double* q = tab->q[static_cast<std::size_t>(j)].data() + m * nodes;
        const double cell = std::ldexp(1.0, -j);
        for (std::size_t k = 0; k < nodes; ++k) {
          const double v = tab->rule.weights[k] * std::exp(q[k] * base);
          contrib += v;
          dcontrib += q[k] * v;
        }
        contrib *= cell;
        dcontrib *= cell / a2;
      }
    }
    total += contrib;
    if (per_level) (*per_level)[static_cast<std::size_t>(j)] += contrib;
    if (want_grad) gradient[p] = dcontrib * lambda[p];
  }
  return total;
}

double ModularEvaluator::value_with_nodes(std::span<const double> lambda, std::size_t nodes) const {
  return accumulate(lambda, 0.0, nodes, {}, nullptr);
}

double ModularEvaluator::smoothed(std::span<const double> lambda, double eps, std::span<double> gradient) const {
  return accumulate(lambda, eps, spec_.quadrature_nodes_per_cell, gradient, nullptr);
}

namespace {

void require_lambda(const WaveletCoefficients& coeffs) {
  if (coeffs.convention() != Convention::Lambda) {
    throw std::invalid_argument("modular: coefficients must be in the lambda convention");
  }
}

}  // namespace

double ModularEvaluator::value(const WaveletCoefficients& coeffs) const {
  require_lambda(coeffs);
  std::size_t nodes = spec_.quadrature_nodes_per_cell;
  double prev = accumulate(coeffs.flat(), 0.0, nodes, {}, nullptr);
  if (constant_q_) return prev;
  while (nodes < 64) {
    nodes = std::min<std::size_t>(2 * nodes, 64);
    const double cur = accumulate(coeffs.flat(), 0.0, nodes, {}, nullptr);
    const bool done = std::abs(cur - prev) < spec_.target_tolerance * std::max(1.0, cur);
    prev = cur;
    if (done) break;
  }
  return prev;
}

std::vector<double> ModularEvaluator::level_contributions(const WaveletCoefficients& coeffs) const {
  require_lambda(coeffs);
  std::vector<double> levels;
  std::size_t nodes = spec_.quadrature_nodes_per_cell;
  double prev = accumulate(coeffs.flat(), 0.0, nodes, {}, &levels);
  while (!constant_q_ && nodes < 64) {
    nodes = std::min<std::size_t>(2 * nodes, 64);
    const double cur = accumulate(coeffs.flat(), 0.0, nodes, {}, &levels);
    const bool done = std::abs(cur - prev) < spec_.target_tolerance * std::max(1.0, cur);
    prev = cur;
    if (done) break;
  }
  return levels;
}

double modular_value(const WaveletCoefficients& coeffs, const ModularSpec& spec) {
  return ModularEvaluator(spec, coeffs.max_level()).value(coeffs);
}

double luxemburg_norm(const WaveletCoefficients& coeffs, const ModularSpec& spec) {
  return luxemburg_norm(coeffs, ModularEvaluator(spec, coeffs.max_level()));
}

double luxemburg_norm(const WaveletCoefficients& coeffs, const ModularEvaluator& evaluator) {
  require_lambda(coeffs);
  const double rho = evaluator.value(coeffs);
  if (rho == 0.0) return 0.0;
  if (!std::isfinite(rho)) {
    throw std::invalid_argument("luxemburg_norm: modular is not finite");
  }
  WaveletCoefficients scaled = coeffs;
  auto rho_at = [&](double mu) {
    auto out = scaled.flat();
    const auto in = coeffs.flat();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / mu;
    return evaluator.value(scaled);
  };

  double lo = std::pow(rho, 1.0 / evaluator.spec().q.lower_bound());
  double hi = lo;
  if (rho_at(lo) > 1.0) {
    do {
      lo = hi;
      hi *= 4.0;
    } while (rho_at(hi) > 1.0);
  } else {
    do {
      hi = lo;
      lo /= 4.0;
    } while (rho_at(lo) <= 1.0);
  }
  // Invariant: rho(u/lo) > 1 >= rho(u/hi).
  while (hi - lo > 1e-10 * hi) {
    const double mid = std::sqrt(lo * hi);
    if (rho_at(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

MeanEstimate mean_estimate(const std::function<double(std::size_t)>& draw, std::size_t count) {
  if (count < 2) {
    throw std::invalid_argument("mean_estimate: need at least two samples");
  }
  // Welford update.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = draw(i);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(count - 1);
  return {mean, std::sqrt(var / static_cast<double>(count)), count};
}

MeanEstimate expectation_modular_estimate(const std::function<WaveletCoefficients(std::size_t)>& sampler,
                                          const ModularSpec& spec, std::size_t sample_count) {
  std::unique_ptr<ModularEvaluator> evaluator;
  return mean_estimate(
      [&](std::size_t i) {
        const auto c = sampler(i);
        if (!evaluator || evaluator->max_level() != c.max_level()) {
          evaluator = std::make_unique<ModularEvaluator>(spec, c.max_level());
        }
        return evaluator->value(c);
      },
      sample_count);
}

}  // namespace varbesov
