#include "doctest.h"

#include <cmath>
#include <random>

#include "varbesov/bayes.hpp"

using namespace varbesov;

namespace {

PriorSpec gaussian_spec(int J, double delta = 1.0, std::uint64_t seed = 3) {
  PriorSpec spec;
  spec.s = ExponentField::constant(1.5);
  spec.q = ExponentField::constant(2.0);
  spec.delta = delta;
  spec.truncation = J;
  spec.seed = seed;
  return spec;
}

PosteriorHandle make_handle(const PriorSpec& spec, std::size_t k, double variance, const Eigen::VectorXd& y,
                            double time = 0.01) {
  return PosteriorHandle(PriorModel(spec), ForwardOperator(ForwardModel::heat(time, 16)),
                         Observation(ObservationSetup::equispaced(k, variance)), y);
}

Eigen::VectorXd fixed_data(std::size_t k, double shift) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::sin(2.0 * i + shift) + 0.3;
  return y;
}

// Linear-Gaussian closed forms with M = W A diag(gamma), b = W y, xi ~ N(0, I).
struct GaussianPosterior {
  Eigen::MatrixXd precision;  // I + M^T M
  Eigen::VectorXd mean;       // in xi
  double log_z = 0.0;
};

GaussianPosterior gaussian_posterior(const PosteriorHandle& h) {
  const auto& g = h.prior().gammas();
  const Eigen::VectorXd gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::MatrixXd m = h.whitened_matrix() * gamma.asDiagonal();
  const Eigen::VectorXd& b = h.whitened_data();
  GaussianPosterior out;
  out.precision = Eigen::MatrixXd::Identity(m.cols(), m.cols()) + m.transpose() * m;
  Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
  out.mean = llt.solve(m.transpose() * b);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  // -1/2 b^T (I + M M^T)^{-1} b = -1/2 (|b|^2 - b^T M P^{-1} M^T b)
  out.log_z = -0.5 * log_det + 0.5 * b.dot(m * out.mean);
  return out;
}

}  // namespace

TEST_CASE("potential hand case and floor") {
  // Only the constant coefficient is set; heat keeps mode 0, so G u = 0.5.
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.0);
  const auto h = make_handle(gaussian_spec(2), 1, 1.0, y);
  WaveletCoefficients u(2, Convention::U);
  u.flat()[0] = 0.5;
  CHECK(h.potential(u) == doctest::Approx(-0.375).epsilon(1e-12));
  CHECK(h.potential_direct(u) == doctest::Approx(-0.375).epsilon(1e-12));
  CHECK(h.potential_floor() == doctest::Approx(-0.5).epsilon(1e-15));

  const auto zero = make_handle(gaussian_spec(3), 4, 0.1, Eigen::VectorXd::Zero(4));
  CHECK(zero.potential(WaveletCoefficients(3, Convention::U)) == 0.0);
  for (std::uint64_t i = 0; i < 20; ++i) CHECK(zero.potential(zero.prior().draw(i).coeffs) >= 0.0);
}

TEST_CASE("matrix potential agrees with direct propagation") {
  const std::size_t k = 6;
  ObservationSetup setup = ObservationSetup::equispaced(k, 0.05);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    setup.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 0.01;
    setup.gamma(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 0.01;
  }
  PriorSpec spec = gaussian_spec(5);
  spec.q = ExponentField::trig(1.5, {0.3});
  const PosteriorHandle h(PriorModel(spec), ForwardOperator(ForwardModel::fractional(0.6, 0.8, 0.002, 24)),
                          Observation(setup), fixed_data(k, 0.2));
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto u = h.prior().draw(i).coeffs;
    const double a = h.potential(u);
    const double b = h.potential_direct(u);
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
    CHECK(h.potential(u.to(Convention::Lambda)) == doctest::Approx(a).epsilon(1e-12));
  }
  const auto cut = h.truncated(2);
  const auto u = h.prior().draw(0).coeffs;
  CHECK(std::abs(cut.potential(u) - cut.potential_direct(u)) <= 1e-10 * (1.0 + std::abs(cut.potential(u))));
  CHECK_THROWS(h.truncated(6));
  CHECK_THROWS(h.with_data(Eigen::VectorXd::Zero(3)));
}

TEST_CASE("normalizing constant against the Gaussian closed form") {
  const auto h = make_handle(gaussian_spec(2, 2.0), 4, 0.2, fixed_data(4, 0.5));
  const auto exact = gaussian_posterior(h);
  const auto z = estimate_z(h, 200000);
  CHECK(std::abs(z.z - std::exp(exact.log_z)) <= 4.0 * z.standard_error);
  CHECK(z.standard_error < 0.05 * z.z);

  // Standard error shrinks like n^{-1/2}.
  const auto small = estimate_z(h, 5000);
  const auto large = estimate_z(h, 20000);
  CHECK(small.standard_error / large.standard_error == doctest::Approx(2.0).epsilon(0.2));

  // Zero data: Phi >= 0, so Z <= 1.
  const auto flat = make_handle(gaussian_spec(2), 3, 1.0, Eigen::VectorXd::Zero(3));
  CHECK(estimate_z(flat, 1000).z <= 1.0);
}

TEST_CASE("Hellinger distance between Gaussian posteriors") {
  const auto a = make_handle(gaussian_spec(2, 2.0), 4, 0.2, fixed_data(4, 0.5));
  const auto b = a.with_data(fixed_data(4, 0.9));
  const auto pa = gaussian_posterior(a);
  const auto pb = gaussian_posterior(b);
  const Eigen::VectorXd dm = pa.mean - pb.mean;
  const double exact = std::sqrt(1.0 - std::exp(-0.125 * dm.dot(pa.precision * dm)));

  const PriorEnsemble ensemble(a.prior(), 200000);
  const auto est = hellinger(a, b, ensemble);
  CHECK(std::abs(est.distance - exact) <= 4.0 * est.standard_error + 1e-3);
  CHECK(est.standard_error > 0.0);
  CHECK(est.squared == doctest::Approx(est.distance * est.distance).epsilon(1e-12));

  CHECK(hellinger(a, a, ensemble).distance == 0.0);
  CHECK(hellinger(b, a, ensemble).distance == doctest::Approx(est.distance).epsilon(1e-12));
  const auto c = a.with_data(fixed_data(4, 1.4));
  const double ab = est.distance;
  const double bc = hellinger(b, c, ensemble).distance;
  const double ac = hellinger(a, c, ensemble).distance;
  CHECK(ac <= ab + bc + 1e-12);

  const auto other = make_handle(gaussian_spec(2, 2.0, 99), 4, 0.2, fixed_data(4, 0.5));
  CHECK_THROWS(hellinger(a, other, ensemble));
  CHECK_THROWS(hellinger(a, other, 100));
}

TEST_CASE("truncation study") {
  const auto h = make_handle(gaussian_spec(4, 1.0), 8, 0.01, fixed_data(8, 0.1), 0.001);
  const auto rows = truncation_study(h, {0, 1, 2, 4}, 20000);
  REQUIRE(rows.size() == 4);
  CHECK(rows[3].distance == 0.0);
  CHECK(rows[0].distance > rows[2].distance);
  for (const auto& r : rows) CHECK(r.standard_error >= 0.0);
}

TEST_CASE("MCMC behaviour") {
  ChainConfig bad;
  bad.burn_in = bad.steps;
  CHECK_THROWS(bad.validate());

  const auto h = make_handle(gaussian_spec(1, 1.0), 3, 0.05, fixed_data(3, 0.3));
  ChainConfig tiny;
  tiny.steps = 2000;
  tiny.burn_in = 100;
  tiny.proposal_scale = 1e-6;
  tiny.adapt = false;
  const auto sticky = run_mcmc(h, tiny);
  CHECK(sticky.acceptance_rate > 0.99);
  CHECK(sticky.block_size == 2);
  CHECK(sticky.xi.rows() == 1900);

  ChainConfig config;
  config.steps = 400000;
  config.burn_in = 20000;
  config.seed = 5;
  const auto chain = run_mcmc(h, config);
  CHECK(chain.acceptance_rate > 0.1);
  CHECK(chain.acceptance_rate < 0.5);
  const auto exact = gaussian_posterior(h);
  const Eigen::MatrixXd cov = exact.precision.inverse();
  const Eigen::VectorXd mean = chain.xi.colwise().mean().transpose();
  for (Eigen::Index p = 0; p < mean.size(); ++p) {
    CHECK(std::abs(mean(p) - exact.mean(p)) <= 0.05 * std::sqrt(cov(p, p)) + 0.02);
  }
  const Eigen::MatrixXd centred = chain.xi.rowwise() - mean.transpose();
  const Eigen::VectorXd var = centred.colwise().squaredNorm().transpose() / static_cast<double>(centred.rows() - 1);
  for (Eigen::Index p = 0; p < var.size(); ++p) CHECK(var(p) == doctest::Approx(cov(p, p)).epsilon(0.1));

  const auto again = run_mcmc(h, config);
  CHECK(again.potential == chain.potential);
}

TEST_CASE("uninformative data leaves the prior") {
  const auto h = make_handle(gaussian_spec(2, 1.0), 2, 1e12, Eigen::VectorXd::Zero(2));
  ChainConfig config;
  config.steps = 200000;
  config.burn_in = 10000;
  const auto chain = run_mcmc(h, config);
  const Eigen::VectorXd mean = chain.xi.colwise().mean().transpose();
  const Eigen::MatrixXd centred = chain.xi.rowwise() - mean.transpose();
  const Eigen::VectorXd var = centred.colwise().squaredNorm().transpose() / static_cast<double>(centred.rows() - 1);
  for (Eigen::Index p = 0; p < var.size(); ++p) CHECK(var(p) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("assumption audit") {
  const auto h = make_handle(gaussian_spec(4, 1.0), 8, 0.01, fixed_data(8, 0.1));
  ModularSpec x;
  x.s = ExponentField::constant(0.5);
  x.q = ExponentField::constant(2.0);
  const auto r1 = audit_assumption1(h, x, 2.0, 300, 1);
  const auto r2 = audit_assumption1(h, x, 2.0, 300, 2);
  CHECK(r1.lower_bound_violations == 0);
  CHECK(r1.worst_lower_bound_margin >= 0.0);
  CHECK(r1.lipschitz_u > 0.0);
  CHECK(r1.lipschitz_u / r2.lipschitz_u == doctest::Approx(1.0).epsilon(0.5));
  CHECK(r1.lipschitz_y / r2.lipschitz_y == doctest::Approx(1.0).epsilon(0.5));
  // X = B^t_q itself: every ratio is 1.
  CHECK(r1.embedding_lower_bound == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r1.delta_threshold == doctest::Approx(4.0 * std::pow(r1.embedding_lower_bound, 2.0)));
  CHECK(r1.delta_warning == (1.0 <= r1.delta_threshold));
  CHECK(r1.delta_warning);
  CHECK_THROWS(audit_assumption1(h, x, 2.0, 10, 1));

  // L^2 = B^0_2 into which B^{0.5}_2 embeds with c_e = 1 on the scaling
  // function and < 1 on details.
  ModularSpec l2;
  l2.s = ExponentField::constant(0.0);
  l2.q = ExponentField::constant(2.0);
  CHECK(embedding_lower_bound(x, l2, 4) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(delta_threshold(x, l2, 4) == doctest::Approx(4.0).epsilon(1e-9));
}
