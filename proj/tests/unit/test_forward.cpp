#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "varbesov/forward.hpp"

using namespace varbesov;

namespace {

std::vector<double> cosine_samples(std::size_t n, long k) {
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::cos(2.0 * std::numbers::pi * k * static_cast<double>(i) / n);
  return f;
}

Spectrum random_spectrum(std::size_t cutoff, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Spectrum s;
  s.modes.resize(cutoff + 1);
  s.modes[0] = {normal(gen), 0.0};
  for (std::size_t k = 1; k <= cutoff; ++k) s.modes[k] = {normal(gen), normal(gen)};
  return s;
}

}  // namespace

TEST_CASE("heat propagation of single cosines") {
  for (double t : {0.001, 0.01}) {
    const ForwardOperator op(ForwardModel::heat(t, 100));
    for (long k = 0; k <= 64; ++k) {
      const auto f = cosine_samples(256, k);
      const auto g = propagate(f, op);
      const double factor = std::exp(-4.0 * std::numbers::pi * std::numbers::pi * k * k * t);
      double worst = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(g[i] - factor * f[i]));
      CHECK(worst <= 1e-12);
    }
  }
  const ForwardOperator op(ForwardModel::heat(0.01, 16));
  CHECK(op.multipliers()[1] == doctest::Approx(0.6738254).epsilon(1e-6));
  const std::vector<double> ones(64, 1.0);
  for (double v : propagate(ones, op)) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fractional model with alpha = beta = 1 reduces to heat") {
  for (double t : {0.001, 0.01, 0.05}) {
    const ForwardOperator heat(ForwardModel::heat(t, 64));
    const ForwardOperator frac(ForwardModel::fractional(1.0, 1.0, t, 64));
    for (std::size_t k = 0; k <= 64; ++k) {
      CHECK(std::abs(heat.multipliers()[k] - frac.multipliers()[k]) <= 1e-10);
    }
  }
}

TEST_CASE("fractional multipliers decrease strictly and stay in (0, 1]") {
  for (auto [alpha, beta] : {std::pair{0.5, 0.75}, std::pair{0.3, 0.5}, std::pair{0.9, 1.0}}) {
    const ForwardOperator op(ForwardModel::fractional(alpha, beta, 0.01, 200));
    const auto m = op.multipliers();
    CHECK(m[0] == 1.0);
    for (std::size_t k = 1; k < m.size(); ++k) {
      CHECK(m[k] > 0.0);
      CHECK(m[k] < m[k - 1]);
    }
  }
}

TEST_CASE("model validation") {
  CHECK_THROWS(ForwardOperator(ForwardModel::fractional(0.5, 0.25, 1.0)));
  CHECK_THROWS(ForwardOperator(ForwardModel::fractional(0.0, 0.5, 1.0)));
  CHECK_THROWS(ForwardOperator(ForwardModel::heat(0.0)));
  CHECK_THROWS(ForwardOperator(ForwardModel::heat(1.0, 0)));
  ForwardModel bad = ForwardModel::heat(1.0);
  bad.alpha = 0.5;
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(ForwardOperator(ForwardModel::fractional(0.5, 0.26, 1.0)));
}

TEST_CASE("linearity and the heat semigroup") {
  std::mt19937_64 gen(4);
  const ForwardOperator a(ForwardModel::heat(0.003, 32));
  const ForwardOperator b(ForwardModel::heat(0.004, 32));
  const ForwardOperator ab(ForwardModel::heat(0.007, 32));
  const auto u = random_spectrum(32, gen);
  const auto v = random_spectrum(32, gen);
  Spectrum mix;
  for (std::size_t k = 0; k <= 32; ++k) mix.modes.push_back(2.0 * u.modes[k] - 3.0 * v.modes[k]);
  const auto lhs = propagate(mix, a);
  const auto pu = propagate(u, a);
  const auto pv = propagate(v, a);
  const auto twice = propagate(propagate(u, a), b);
  const auto once = propagate(u, ab);
  for (double x : {0.0, 0.13, 0.5, 0.77}) {
    CHECK(std::abs(lhs(x) - (2.0 * pu(x) - 3.0 * pv(x))) <= 1e-12);
    CHECK(std::abs(twice(x) - once(x)) <= 1e-12);
  }
}

TEST_CASE("observation by exact trigonometric evaluation") {
  Spectrum c;
  c.modes = {0.0, 0.5};
  const std::vector<double> quarter{0.25};
  CHECK(std::abs(observe(c, quarter)(0)) <= 1e-15);
  const std::vector<double> two{0.0, 0.5};
  const auto y = observe(c, two);
  CHECK(y(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(y(1) == doctest::Approx(-1.0).epsilon(1e-15));

  std::mt19937_64 gen(2);
  const auto s = random_spectrum(20, gen);
  const std::size_t n = 64;
  const auto grid = spectrum_to_grid(s, n);
  std::vector<double> points(n);
  for (std::size_t i = 0; i < n; ++i) points[i] = static_cast<double>(i) / n;
  const auto at_points = observe(s, points);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(at_points(static_cast<Eigen::Index>(i)) - grid[i]) <= 1e-12);

  const auto back = spectrum_from_grid(grid, 20);
  for (std::size_t k = 0; k <= 20; ++k) CHECK(std::abs(back.modes[k] - s.modes[k]) <= 1e-13);
  CHECK_THROWS(spectrum_from_grid(grid, 32));
  CHECK_THROWS(spectrum_to_grid(s, 40));
}

TEST_CASE("wavelet spectrum map") {
  const WaveletFamily family(4);
  const WaveletSpectrumMap map(family, 4, 24);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal;
  WaveletCoefficients u(4, Convention::U);
  for (double& x : u.flat()) x = normal(gen);
  const auto s = map.apply(u);
  for (long k : {0L, 1L, 5L, 24L}) {
    std::complex<double> direct{};
    for (std::size_t p = 0; p < u.size(); ++p) {
      direct += u.flat()[p] * basis_fourier_coefficient(WaveletCoefficients::index_of(p), family, k);
    }
    CHECK(std::abs(s.modes[static_cast<std::size_t>(k)] - direct) <= 1e-12);
  }
  CHECK_THROWS(map.apply(u.to(Convention::Lambda)));
  CHECK_THROWS(map.apply(WaveletCoefficients(3, Convention::U)));
}

TEST_CASE("observation setups and data simulation") {
  CHECK_THROWS(Observation(ObservationSetup::diagonal({0.2, 1.0}, 1.0)));
  CHECK_THROWS(Observation(ObservationSetup::diagonal({0.2, 0.4}, -1.0)));
  ObservationSetup asym = ObservationSetup::diagonal({0.2, 0.4}, 1.0);
  asym.gamma(0, 1) = 0.3;
  CHECK_THROWS(Observation(asym));

  const ForwardOperator op(ForwardModel::heat(0.01, 16));
  Spectrum u;
  u.modes = {0.3, {0.5, -0.2}, {0.1, 0.1}};
  const Observation quiet(ObservationSetup::diagonal({0.1, 0.6}, 1e-30));
  const auto clean = observe(propagate(u, op), quiet.setup().points);
  const auto y = simulate_data(u, op, quiet, 5);
  CHECK((y - clean).cwiseAbs().maxCoeff() <= 1e-12);

  ObservationSetup corr = ObservationSetup::diagonal({0.1, 0.6}, 1.0);
  corr.gamma << 1.0, 0.5, 0.5, 2.0;
  const Observation obs(corr);
  CHECK(simulate_data(u, op, obs, 7, 3) == simulate_data(u, op, obs, 7, 3));
  CHECK(simulate_data(u, op, obs, 7, 3) != simulate_data(u, op, obs, 7, 4));

  const auto base = observe(propagate(u, op), corr.points);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const Eigen::Vector2d e = simulate_data(u, op, obs, 11, r) - base;
    cov += e * e.transpose();
  }
  cov /= reps;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(cov(i, j) - corr.gamma(i, j)) <= 0.05 * std::sqrt(corr.gamma(i, i) * corr.gamma(j, j)));
    }
  }
  const Eigen::VectorXd r = Eigen::Vector2d(0.3, -1.2);
  CHECK(obs.whiten(r).squaredNorm() == doctest::Approx(r.dot(corr.gamma.inverse() * r)).epsilon(1e-12));
}

TEST_CASE("smoothing bound is finite and stable") {
  const double small = smoothing_sup(0.5, 0.75, 1000);
  const double large = smoothing_sup(0.5, 0.75, 10000);
  CHECK(std::isfinite(large));
  CHECK(std::abs(large - small) <= 0.01 * large);
}
