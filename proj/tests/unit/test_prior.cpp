#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "varbesov/prior.hpp"

using namespace varbesov;

namespace {

PriorSpec base_spec(double s = 1.0, double q = 2.0, double delta = 1.0, int J = 5) {
  PriorSpec spec;
  spec.s = ExponentField::constant(s);
  spec.q = ExponentField::constant(q);
  spec.delta = delta;
  spec.truncation = J;
  spec.seed = 42;
  return spec;
}

std::vector<double> draws(const ExponentField& q, std::size_t n, std::uint64_t seed) {
  const XiSampler sampler(q, uniform_kappa());
  auto rng = CounterRng::keyed(seed, {1});
  return sample_xi(sampler, n, rng);
}

std::pair<double, double> mean_var(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, s / static_cast<double>(v.size() - 1)};
}

}  // namespace

TEST_CASE("gamma hand values and scaling law") {
  CHECK(prior_gamma(0, 0, base_spec()) == 1.0);
  CHECK(prior_gamma(2, 1, base_spec()) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(prior_gamma(2, 1, base_spec(1.0, 2.0, 16.0)) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK_THROWS(prior_gamma(2, 4, base_spec()));

  PriorSpec spec = base_spec();
  spec.s = ExponentField::trig(1.2, {0.3});
  PriorSpec shifted = spec;
  shifted.s = spec.s.shifted(0.4);
  for (int j = 0; j <= 6; ++j) {
    for (std::size_t m = 0; m < (std::size_t{1} << j); m += 3) {
      CHECK(prior_gamma(j, m, shifted) ==
            doctest::Approx(prior_gamma(j, m, spec) * std::exp2(-0.4 * j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS(PriorModel(base_spec(0.0)));
  CHECK_THROWS(PriorModel(base_spec(1.0, 0.5)));
  CHECK_THROWS(PriorModel(base_spec(1.0, 2.0, 0.0)));
  PriorSpec bad = base_spec();
  bad.kappa_nodes = {{0.0, 0.5}, {0.5, 0.6}};
  CHECK_THROWS(PriorModel(bad));
  bad.kappa_nodes = {{0.0, 1.5}, {0.5, -0.5}};
  CHECK_THROWS(PriorModel(bad));
}

TEST_CASE("q = 2 gives the standard normal") {
  auto v = draws(ExponentField::constant(2.0), 100000, 7);
  const auto [m, var] = mean_var(v);
  CHECK(std::abs(var - 1.0) <= 0.02);
  CHECK(std::abs(m) <= 4.0 * std::sqrt(var / v.size()));
  // Kolmogorov-Smirnov at level 0.01 (asymptotic critical value 1.6276/sqrt(n)).
  std::sort(v.begin(), v.end());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-v[i] / std::numbers::sqrt2);
    d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(d < 1.6276 / std::sqrt(n));
}

TEST_CASE("q = 1 gives the Laplace law with scale 2") {
  const auto v = draws(ExponentField::constant(1.0), 100000, 8);
  const auto [m, var] = mean_var(v);
  CHECK(std::abs(var - 8.0) <= 0.3);
  CHECK(std::abs(m) <= 4.0 * std::sqrt(var / v.size()));
}

TEST_CASE("variable q: symmetric and matches the normalised density") {
  const auto q = ExponentField::trig(1.5, {0.5});
  const XiSampler sampler(q, uniform_kappa());
  auto rng = CounterRng::keyed(9, {2});
  const auto v = sample_xi(sampler, 100000, rng);
  const auto [m, var] = mean_var(v);
  CHECK(std::abs(m) <= 4.0 * std::sqrt(var / v.size()));

  // Density from an independent evaluation of the potential over kappa.
  auto density = [&](double x) {
    double phi = 0.0;
    for (int i = 0; i < 64; ++i) phi += std::pow(std::abs(x), q(i / 64.0)) / 64.0;
    return std::exp(-0.5 * phi);
  };
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double lo = -12.0;
  const double hi = 12.0;
  const double z = Kronrod::integrate(density, -40.0, 40.0, 15, 1e-12);
  const int bins = 60;
  const double width = (hi - lo) / bins;
  std::vector<double> counts(bins, 0.0);
  double outside = 0.0;
  for (double x : v) {
    const int b = static_cast<int>(std::floor((x - lo) / width));
    if (b < 0 || b >= bins) {
      outside += 1.0;
    } else {
      counts[b] += 1.0;
    }
  }
  double tv = 0.0;
  double inside_mass = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double p = Kronrod::integrate(density, lo + b * width, lo + (b + 1) * width, 10, 1e-12) / z;
    inside_mass += p;
    tv += std::abs(counts[b] / v.size() - p);
  }
  tv += std::abs(outside / v.size() - (1.0 - inside_mass));
  CHECK(0.5 * tv < 0.02);
}

TEST_CASE("prior draws: determinism, common random numbers, delta scaling") {
  const PriorModel model(base_spec(1.0, 2.0, 1.0, 5));
  const auto a = model.draw(3);
  const auto b = model.draw(3);
  CHECK(std::equal(a.coeffs.flat().begin(), a.coeffs.flat().end(), b.coeffs.flat().begin()));
  for (std::size_t p = 0; p < a.xi.size(); ++p) CHECK(a.coeffs.flat()[p] == model.gammas()[p] * a.xi[p]);

  const PriorModel coarse(base_spec(1.0, 2.0, 1.0, 3));
  const auto c = coarse.draw(3);
  for (std::size_t p = 0; p < c.xi.size(); ++p) CHECK(c.xi[p] == a.xi[p]);

  const PriorModel doubled(base_spec(1.0, 2.0, 2.0, 5));
  const auto d = doubled.draw(3);
  for (std::size_t p = 0; p < a.xi.size(); ++p) {
    CHECK(d.coeffs.flat()[p] == doctest::Approx(a.coeffs.flat()[p] * std::pow(2.0, -0.5)).epsilon(1e-14));
  }
  CHECK(model.draw(4).xi != a.xi);
}

TEST_CASE("per-level coefficient magnitudes decay at the prescribed rate") {
  PriorSpec spec = base_spec(1.0, 2.0, 1.0, 8);
  spec.s = ExponentField::trig(1.0, {0.3});
  const PriorModel model(spec);
  const int J = spec.truncation;
  std::vector<double> level_mean(J + 1, 0.0);
  std::vector<double> level_count(J + 1, 0.0);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto sample = model.draw(k);
    for (std::size_t p = 0; p < sample.coeffs.size(); ++p) {
      const int j = WaveletCoefficients::level_of(p);
      level_mean[j] += std::abs(sample.coeffs.flat()[p]);
      level_count[j] += 1.0;
    }
  }
  const double mean_abs_normal = std::sqrt(2.0 / std::numbers::pi);
  for (int j = 0; j <= J; ++j) {
    const double bound = mean_abs_normal * std::exp2(-j * (spec.s.lower_bound() + 0.5 - 0.5));
    CHECK(level_mean[j] / level_count[j] <= 1.1 * bound);
  }
}

TEST_CASE("exp-moment at alpha = 0") {
  const PriorModel model(base_spec());
  const auto est = fernique_exp_moment(model, ExponentField::constant(0.2), 0.0, 50);
  CHECK(est.mean == 1.0);
  CHECK(est.standard_error == 0.0);
  CHECK_THROWS(fernique_exp_moment(model, ExponentField::constant(0.2), -1.0, 50));
}

TEST_CASE("Hoelder condition hand cases") {
  const HoelderBudget budget{0.5, 1.0, 1.0, 1.0};
  const auto q2 = ExponentField::constant(2.0);
  CHECK(hoelder_condition(ExponentField::constant(2.0), q2, budget));
  CHECK_FALSE(hoelder_condition(ExponentField::constant(1.0), q2, budget));
  const HoelderBudget tiny_theta{0.5, 1.0, 1.0, 1e-12};
  CHECK(hoelder_condition(ExponentField::constant(1.0 + 1e-9), q2, tiny_theta));
  CHECK_FALSE(hoelder_condition(ExponentField::constant(1.0 - 1e-9), q2, tiny_theta));
}

TEST_CASE("Kolmogorov sums") {
  const HoelderBudget budget{0.5, 1.0, 1.0, 1.0};
  PriorSpec spec = base_spec(2.0);
  const auto zero = kolmogorov_sums(spec, budget, 0);
  const double psi = basis_sup_norm(0, Generator::M, spec.family);
  CHECK(zero.s1 == doctest::Approx(1.0 + psi * psi).epsilon(1e-14));

  const auto good = kolmogorov_sums(spec, budget, 8);
  for (int j = 3; j < 8; ++j) {
    CHECK(good.s1_levels[j + 1] < good.s1_levels[j]);
    CHECK(good.s2_levels[j + 1] < good.s2_levels[j]);
  }
  spec.s = ExponentField::constant(0.3);
  const auto bad = kolmogorov_sums(spec, budget, 8);
  for (int j = 3; j < 8; ++j) CHECK(bad.s2_levels[j + 1] > bad.s2_levels[j]);
}

TEST_CASE("empirical Hoelder exponent") {
  const WaveletFamily family(4);
  WaveletCoefficients constant(6, Convention::U);
  constant.flat()[0] = 1.0;
  CHECK(std::isinf(empirical_hoelder_exponent(constant, family, 1024)));
  CHECK_THROWS(empirical_hoelder_exponent(constant, family, 256));

  std::vector<double> f(1024);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::cos(2.0 * std::numbers::pi * i / f.size());
  const auto c = analyze(f, family).truncated(7);
  const WaveletCoefficients cut(7, Convention::U,
                                std::vector<double>(c.flat().begin(), c.flat().begin() + 256));
  CHECK(empirical_hoelder_exponent(cut, family, 1024) == doctest::Approx(1.0).epsilon(0.1));
}
