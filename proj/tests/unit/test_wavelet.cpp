#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "varbesov/wavelet.hpp"

using namespace varbesov;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("Daubechies filters are orthonormal") {
  for (int order = 1; order <= 19; ++order) {
    const WaveletFamily family(order);
    const auto h = family.lowpass();
    REQUIRE(h.size() == static_cast<std::size_t>(2 * order));
    for (std::size_t shift = 0; shift < h.size(); shift += 2) {
      double acc = 0.0;
      for (std::size_t i = 0; i + shift < h.size(); ++i) acc += h[i] * h[i + shift];
      CHECK(std::abs(acc - (shift == 0 ? 1.0 : 0.0)) < 1e-12);
    }
  }
  CHECK_THROWS(WaveletFamily(0));
  CHECK_THROWS(WaveletFamily(20));
}

TEST_CASE("default order follows the regularity threshold") {
  const auto q2 = ExponentField::constant(2.0);
  CHECK(WaveletFamily::for_exponents(ExponentField::constant(1.5), q2).order() == 4);
  CHECK(WaveletFamily::for_exponents(ExponentField::constant(4.2), q2).order() == 6);
}

TEST_CASE("coefficient container layout and conventions") {
  WaveletCoefficients c(3, Convention::U);
  CHECK(c.size() == 16);
  c[{2, Generator::M, 3}] = 1.5;
  CHECK(c.flat()[7] == 1.5);
  CHECK(WaveletCoefficients::index_of(7).level == 2);
  CHECK(WaveletCoefficients::index_of(7).translation == 3);
  CHECK(WaveletCoefficients::index_of(0).generator == Generator::F);
  CHECK(WaveletCoefficients::index_of(1).generator == Generator::M);
  const auto lambda = c.to(Convention::Lambda);
  CHECK(lambda[{2, Generator::M, 3}] == 1.5 * 2.0);
  CHECK(lambda.to(Convention::U)[{2, Generator::M, 3}] == 1.5);
  CHECK_THROWS(WaveletCoefficients(2, Convention::U, std::vector<double>(5)));
  CHECK_THROWS(WaveletIndex{1, Generator::F, 0}.validate());
  CHECK_THROWS(WaveletIndex{2, Generator::M, 4}.validate());
}

TEST_CASE("analysis of a constant") {
  const WaveletFamily family(4);
  const std::vector<double> ones(256, 1.0);
  const auto c = analyze(ones, family);
  CHECK(c.scaling() == doctest::Approx(1.0).epsilon(1e-13));
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c.flat()[i]) < 1e-12);
}

TEST_CASE("round trip, Parseval and isomorphism on random signals") {
  for (int order : {2, 4, 6}) {
    const WaveletFamily family(order);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto f = random_signal(1024, seed);
      const auto c = analyze(f, family);
      const auto back = synthesize(c, family, f.size());
      double err = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) err += (f[i] - back[i]) * (f[i] - back[i]);
      CHECK(std::sqrt(err / norm2(f)) <= 1e-10);
      CHECK(std::abs(norm2(c.flat()) - norm2(f) / f.size()) <= 1e-10 * norm2(f) / f.size());
      const auto again = analyze(back, family);
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(again.flat()[i] - c.flat()[i]) <= 1e-12);
    }
  }
}

TEST_CASE("synthesis edge cases") {
  const WaveletFamily family(4);
  const WaveletCoefficients zero(5, Convention::U);
  for (double v : synthesize(zero, family, 64)) CHECK(v == 0.0);

  WaveletCoefficients unit(5, Convention::U);
  unit[{3, Generator::M, 5}] = 1.0;
  const auto samples = synthesize(unit, family, 1024);
  CHECK(norm2(samples) / 1024.0 == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS(synthesize(zero, family, 32));
  CHECK_THROWS(synthesize(zero, family, 100));
  CHECK_THROWS(analyze(std::vector<double>(100, 0.0), family));
  CHECK_THROWS(analyze(std::vector<double>(4, 0.0), family));
}

TEST_CASE("cosine round trip") {
  const WaveletFamily family(4);
  std::vector<double> f(512);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::cos(2.0 * std::numbers::pi * i / f.size());
  const auto back = synthesize(analyze(f, family), family, f.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(back[i] - f[i]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("vanishing moments annihilate polynomials away from the wrap") {
  for (int order : {2, 4, 6}) {
    const WaveletFamily family(order);
    const std::size_t n = 1024;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n;
      f[i] = std::pow(x - 0.3, order - 1) + 0.5 * x;
    }
    const auto c = analyze(f, family);
    const std::size_t support = family.support_length();
    for (int j = 0; j <= c.max_level(); ++j) {
      const auto d = c.detail(j);
      for (std::size_t m = 0; m + support < d.size(); ++m) CHECK(std::abs(d[m]) <= 1e-8);
    }
  }
}

TEST_CASE("pointwise basis: periodicity and the constant scaling function") {
  const WaveletFamily family(4);
  for (double x : {0.0, 0.1, 0.37, 0.99}) {
    CHECK(evaluate_basis({0, Generator::F, 0}, family, x) == doctest::Approx(1.0).epsilon(1e-12));
    const WaveletIndex idx{3, Generator::M, 2};
    CHECK(evaluate_basis(idx, family, x) == doctest::Approx(evaluate_basis(idx, family, x + 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("pointwise basis matches discrete synthesis") {
  const WaveletFamily family(4);
  const std::size_t n = 1 << 14;
  WaveletCoefficients unit(6, Convention::U);
  unit[{4, Generator::M, 9}] = 1.0;
  const auto samples = synthesize(unit, family, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += 7) {
    worst = std::max(worst, std::abs(samples[i] - evaluate_basis({4, Generator::M, 9}, family,
                                                                  static_cast<double>(i) / n)));
  }
  // Discrete synthesis is a finite cascade, so only approximate pointwise.
  CHECK(worst < 1e-2 * basis_sup_norm(4, Generator::M, family));
}

TEST_CASE("quadrature orthonormality of distinct basis functions") {
  const WaveletFamily family(4);
  const std::size_t n = 1 << 14;
  const std::vector<WaveletIndex> indices{{0, Generator::F, 0}, {0, Generator::M, 0}, {2, Generator::M, 1},
                                          {3, Generator::M, 2}, {5, Generator::M, 17}};
  std::vector<std::vector<double>> values;
  for (const auto& idx : indices) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = evaluate_basis(idx, family, static_cast<double>(i) / n);
    values.push_back(std::move(v));
  }
  for (std::size_t a = 0; a < indices.size(); ++a) {
    for (std::size_t b = a; b < indices.size(); ++b) {
      double ip = 0.0;
      for (std::size_t i = 0; i < n; ++i) ip += values[a][i] * values[b][i];
      ip /= static_cast<double>(n);
      CHECK(std::abs(ip - (a == b ? 1.0 : 0.0)) <= 1e-6);
    }
  }
}

TEST_CASE("Fourier coefficients of the basis agree with quadrature") {
  const WaveletFamily family(4);
  const std::size_t n = 1 << 14;
  for (const WaveletIndex idx : {WaveletIndex{0, Generator::F, 0}, WaveletIndex{0, Generator::M, 0},
                                 WaveletIndex{2, Generator::M, 3}, WaveletIndex{4, Generator::M, 5}}) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = evaluate_basis(idx, family, static_cast<double>(i) / n);
    for (long k : {0L, 1L, 2L, 5L, -3L, 16L}) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        acc += v[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * static_cast<double>(i) / n);
      }
      acc /= static_cast<double>(n);
      const auto exact = basis_fourier_coefficient(idx, family, k);
      CHECK(std::abs(acc - exact) <= 1e-6);
    }
  }
  // The periodized scaling function is the constant 1.
  CHECK(std::abs(basis_fourier_coefficient({0, Generator::F, 0}, family, 0) - 1.0) < 1e-14);
  CHECK(std::abs(basis_fourier_coefficient({0, Generator::F, 0}, family, 3)) < 1e-14);
}

TEST_CASE("measured basis constants") {
  const WaveletFamily family(4);
  const auto k = measure_basis_constants(family, 1.0, 6);
  CHECK(k.b == doctest::Approx(0.5).epsilon(0.05));
  CHECK(k.a == doctest::Approx(1.5).epsilon(0.05));
  CHECK(k.a > k.b);
  for (int j = 0; j <= 6; ++j) {
    CHECK(basis_sup_norm(j, Generator::M, family) <= k.C * std::exp2(k.b * j) * (1 + 1e-12));
  }
}
