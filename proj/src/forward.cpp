#include "varbesov/forward.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "varbesov/mittag_leffler.hpp"
#include "varbesov/rng.hpp"

namespace varbesov {
namespace {

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double eigenvalue(long k) {
  const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
  return w * w;
}

}  // namespace

ForwardModel ForwardModel::heat(double time, std::size_t cutoff_modes) {
  return {ForwardKind::Heat, 1.0, 1.0, time, cutoff_modes};
}

ForwardModel ForwardModel::fractional(double alpha, double beta, double time, std::size_t cutoff_modes) {
  return {ForwardKind::Fractional, alpha, beta, time, cutoff_modes};
}

void ForwardModel::validate() const {
  if (!(time > 0.0) || !std::isfinite(time)) {
    throw std::invalid_argument("ForwardModel: time must be positive");
  }
  if (cutoff_modes < 1) {
    throw std::invalid_argument("ForwardModel: cutoff_modes must be >= 1");
  }
  if (kind == ForwardKind::Heat) {
    if (alpha != 1.0 || beta != 1.0) {
      throw std::invalid_argument("ForwardModel: the heat model fixes alpha = beta = 1");
    }
    return;
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("ForwardModel: alpha must lie in (0, 1]");
  }
  if (!(beta > 0.25 && beta <= 1.0)) {
    throw std::invalid_argument("ForwardModel: fractional model needs 1/4 < beta <= 1 (got " +
                                std::to_string(beta) + ")");
  }
}

double ForwardModel::multiplier(long k) const {
  const double lambda = eigenvalue(k);
  if (kind == ForwardKind::Heat) {
    return std::exp(-lambda * time);
  }
  return mittag_leffler(alpha, -std::pow(lambda, beta) * std::pow(time, alpha));
}

ForwardOperator::ForwardOperator(ForwardModel model) : model_(model) {
  model_.validate();
  auto table = std::make_shared<std::vector<double>>(model_.cutoff_modes + 1);
  for (std::size_t k = 0; k < table->size(); ++k) (*table)[k] = model_.multiplier(static_cast<long>(k));
  multipliers_ = std::move(table);
}

double Spectrum::operator()(double x) const {
  if (modes.empty()) return 0.0;
  double v = modes[0].real();
  const double w = 2.0 * std::numbers::pi * x;
  for (std::size_t k = 1; k < modes.size(); ++k) {
    v += 2.0 * (modes[k] * std::polar(1.0, w * static_cast<double>(k))).real();
  }
  return v;
}

Spectrum spectrum_from_grid(std::span<const double> samples, std::size_t cutoff) {
  const std::size_t n = samples.size();
  if (n < 4 || 2 * cutoff + 2 > n) {
    throw std::invalid_argument("spectrum_from_grid: cutoff must be <= N/2 - 1");
  }
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  std::copy(samples.begin(), samples.end(), in);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  Spectrum s;
  s.modes.resize(cutoff + 1);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k <= cutoff; ++k) s.modes[k] = {out[k][0] * scale, out[k][1] * scale};
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

std::vector<double> spectrum_to_grid(const Spectrum& spectrum, std::size_t grid_size) {
  const std::size_t n = grid_size;
  if (n < 2 * spectrum.cutoff() + 2) {
    throw std::invalid_argument("spectrum_to_grid: grid too small for the spectrum");
  }
  fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
  double* out = fftw_alloc_real(n);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const auto c = k < spectrum.modes.size() ? spectrum.modes[k] : std::complex<double>{};
    in[k][0] = c.real();
    in[k][1] = k == 0 ? 0.0 : c.imag();
  }
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> result(out, out + n);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return result;
}

WaveletSpectrumMap::WaveletSpectrumMap(const WaveletFamily& family, int max_level, std::size_t cutoff)
    : max_level_(max_level) {
  const std::size_t count = WaveletCoefficients::count_for_level(max_level);
  matrix_.resize(static_cast<Eigen::Index>(cutoff + 1), static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k <= cutoff; ++k) {
    // One transform per (level, generator); translations only rotate the phase.
    std::vector<std::complex<double>> level_value(static_cast<std::size_t>(max_level) + 1);
    for (int j = 0; j <= max_level; ++j) {
      level_value[static_cast<std::size_t>(j)] =
          basis_fourier_coefficient({j, Generator::M, 0}, family, static_cast<long>(k));
    }
    const auto row = static_cast<Eigen::Index>(k);
    matrix_(row, 0) = basis_fourier_coefficient({0, Generator::F, 0}, family, static_cast<long>(k));
    for (std::size_t p = 1; p < count; ++p) {
      const auto idx = WaveletCoefficients::index_of(p);
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           std::ldexp(static_cast<double>(idx.translation), -idx.level);
      matrix_(row, static_cast<Eigen::Index>(p)) =
          level_value[static_cast<std::size_t>(idx.level)] * std::polar(1.0, phase);
    }
  }
}

Spectrum WaveletSpectrumMap::apply(const WaveletCoefficients& coeffs) const {
  if (coeffs.max_level() != max_level_) {
    throw std::invalid_argument("WaveletSpectrumMap: coefficient level mismatch");
  }
  if (coeffs.convention() != Convention::U) {
    throw std::invalid_argument("WaveletSpectrumMap: expects u-convention coefficients");
  }
  const Eigen::Map<const Eigen::VectorXd> u(coeffs.flat().data(), static_cast<Eigen::Index>(coeffs.size()));
  const Eigen::VectorXcd c = matrix_ * u.cast<std::complex<double>>();
  Spectrum s;
  s.modes.assign(c.data(), c.data() + c.size());
  return s;
}

Spectrum propagate(const Spectrum& spectrum, const ForwardOperator& op) {
  const auto m = op.multipliers();
  Spectrum out;
  const std::size_t n = std::min(spectrum.modes.size(), m.size());
  out.modes.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.modes[k] = spectrum.modes[k] * m[k];
  return out;
}

std::vector<double> propagate(std::span<const double> samples, const ForwardOperator& op) {
  const std::size_t cutoff = std::min(op.cutoff(), samples.size() / 2 - 1);
  return spectrum_to_grid(propagate(spectrum_from_grid(samples, cutoff), op), samples.size());
}

Spectrum propagate(const WaveletCoefficients& coeffs, const WaveletFamily& family, const ForwardOperator& op) {
  const auto u = coeffs.convention() == Convention::U ? coeffs : coeffs.to(Convention::U);
  return propagate(WaveletSpectrumMap(family, u.max_level(), op.cutoff()).apply(u), op);
}

ObservationSetup ObservationSetup::diagonal(std::vector<double> points, double variance) {
  ObservationSetup setup;
  const auto k = static_cast<Eigen::Index>(points.size());
  setup.points = std::move(points);
  setup.gamma = Eigen::MatrixXd::Identity(k, k) * variance;
  return setup;
}

ObservationSetup ObservationSetup::equispaced(std::size_t count, double variance, double offset) {
  std::vector<double> points(count);
  for (std::size_t i = 0; i < count; ++i) points[i] = (static_cast<double>(i) + offset) / static_cast<double>(count);
  return diagonal(std::move(points), variance);
}

void ObservationSetup::validate() const {
  if (points.empty()) {
    throw std::invalid_argument("ObservationSetup: need at least one observation point");
  }
  for (double x : points) {
    if (!(x >= 0.0 && x < 1.0)) {
      throw std::invalid_argument("ObservationSetup: points must lie in [0, 1)");
    }
  }
  const auto k = static_cast<Eigen::Index>(points.size());
  if (gamma.rows() != k || gamma.cols() != k) {
    throw std::invalid_argument("ObservationSetup: covariance must be K x K");
  }
  if (!gamma.isApprox(gamma.transpose(), 1e-12)) {
    throw std::invalid_argument("ObservationSetup: covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gamma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("ObservationSetup: covariance is not positive definite");
  }
}

Observation::Observation(ObservationSetup setup) : setup_(std::move(setup)) {
  setup_.validate();
  factor_ = Eigen::LLT<Eigen::MatrixXd>(setup_.gamma).matrixL();
}

Eigen::VectorXd Observation::whiten(const Eigen::VectorXd& r) const {
  return factor_.triangularView<Eigen::Lower>().solve(r);
}

Eigen::MatrixXd Observation::whiten(const Eigen::MatrixXd& r) const {
  return factor_.triangularView<Eigen::Lower>().solve(r);
}

Eigen::VectorXd Observation::color(const Eigen::VectorXd& xi) const {
  return factor_.triangularView<Eigen::Lower>() * xi;
}

Eigen::VectorXd observe(const Spectrum& spectrum, std::span<const double> points) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = spectrum(points[i]);
  return out;
}

Eigen::VectorXd simulate_data(const Spectrum& u_true, const ForwardOperator& op, const Observation& obs,
                              std::uint64_t seed, std::uint64_t replicate) {
  const Eigen::VectorXd clean = observe(propagate(u_true, op), obs.setup().points);
  auto rng = CounterRng::keyed(seed, {streams::kNoise, replicate});
  std::normal_distribution<double> normal;
  Eigen::VectorXd xi(clean.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
  return clean + obs.color(xi);
}

double smoothing_sup(double alpha, double beta, long k_max) {
  const ForwardModel model = ForwardModel::fractional(alpha, beta, 1.0, 1);
  model.validate();
  double best = 0.0;
  for (long k = 1; k <= k_max; ++k) {
    const double lambda_beta = std::pow(eigenvalue(k), beta);
    best = std::max(best, lambda_beta * model.multiplier(k));
  }
  return best;
}

}  // namespace varbesov
