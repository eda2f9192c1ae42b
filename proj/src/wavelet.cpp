#include "varbesov/wavelet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <boost/math/filters/daubechies.hpp>

namespace varbesov {
namespace {

constexpr int kMaxOrder = 19;

template <unsigned P>
std::vector<double> filter_for() {
  const auto taps = boost::math::filters::daubechies_scaling_filter<double, P>();
  return {taps.begin(), taps.end()};
}

template <std::size_t... Ps>
std::vector<double> dispatch_filter(int order, std::index_sequence<Ps...>) {
  std::vector<double> out;
  ((order == static_cast<int>(Ps + 1) ? (out = filter_for<Ps + 1>(), true) : false) || ...);
  return out;
}

double wrap_unit(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) { return std::countr_zero(n); }

// phi at the integers 0..L-1: eigenvector of the two-scale matrix for
// eigenvalue 1, normalised to unit sum.
std::vector<double> scaling_at_integers(std::span<const double> h) {
  const int taps = static_cast<int>(h.size());
  if (taps == 2) {
    return {1.0, 0.0};
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(taps, taps);
  for (int k = 0; k < taps; ++k) {
    for (int i = 0; i < taps; ++i) {
      const int l = 2 * k - i;
      if (l >= 0 && l < taps) {
        system(k, i) = std::numbers::sqrt2 * h[l];
      }
    }
    system(k, k) -= 1.0;
  }
  system.row(taps - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(taps);
  rhs(taps - 1) = 1.0;
  Eigen::VectorXd v = system.fullPivLu().solve(rhs);
  return {v.data(), v.data() + taps};
}

}  // namespace

void WaveletIndex::validate() const {
  if (level < 0) {
    throw std::invalid_argument("wavelet index: negative level");
  }
  if (generator == Generator::F && level != 0) {
    throw std::invalid_argument("wavelet index: generator F only occurs at level 0");
  }
  if (translation >= (std::size_t{1} << level)) {
    throw std::invalid_argument("wavelet index: translation outside M_j");
  }
}

WaveletFamily::WaveletFamily(int order) : order_(order) {
  if (order < 1 || order > kMaxOrder) {
    throw std::invalid_argument("Daubechies order must lie in [1, 19], got " + std::to_string(order));
  }
  lowpass_ = dispatch_filter(order, std::make_index_sequence<kMaxOrder>{});
  const std::size_t taps = lowpass_.size();
  highpass_.resize(taps);
  for (std::size_t l = 0; l < taps; ++l) {
    highpass_[l] = ((l % 2 == 0) ? 1.0 : -1.0) * lowpass_[taps - 1 - l];
  }

  // Dyadic refinement from exact integer values.
  const int taps_i = static_cast<int>(taps);
  std::vector<double> phi = scaling_at_integers(lowpass_);
  for (int r = 1; r <= kTableDepth; ++r) {
    const std::size_t prev_step = std::size_t{1} << (r - 1);
    const std::size_t count = (taps - 1) * (std::size_t{1} << r) + 1;
    std::vector<double> next(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      if (i % 2 == 0) {
        next[i] = phi[i / 2];
        continue;
      }
      double acc = 0.0;
      for (int l = 0; l < taps_i; ++l) {
        const long idx = static_cast<long>(i) - static_cast<long>(l) * static_cast<long>(prev_step);
        if (idx >= 0 && idx < static_cast<long>(phi.size())) {
          acc += lowpass_[l] * phi[idx];
        }
      }
      next[i] = std::numbers::sqrt2 * acc;
    }
    phi = std::move(next);
  }
  const std::size_t unit = std::size_t{1} << kTableDepth;
  std::vector<double> psi(phi.size(), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    double acc = 0.0;
    for (int l = 0; l < taps_i; ++l) {
      const long idx = 2 * static_cast<long>(i) - static_cast<long>(l) * static_cast<long>(unit);
      if (idx >= 0 && idx < static_cast<long>(phi.size())) {
        acc += highpass_[l] * phi[idx];
      }
    }
    psi[i] = std::numbers::sqrt2 * acc;
  }
  tables_ = std::make_shared<const Tables>(Tables{std::move(phi), std::move(psi)});
}

WaveletFamily WaveletFamily::for_exponents(const ExponentField& s, const ExponentField& q) {
  const double threshold = regularity_threshold(s, q, 1);
  const int order = std::max(4, static_cast<int>(std::ceil(threshold)) + 1);
  return WaveletFamily(std::min(order, kMaxOrder));
}

double WaveletFamily::lookup(const std::vector<double>& table, double t) const {
  const double scaled = t * static_cast<double>(std::size_t{1} << kTableDepth);
  if (!(scaled >= 0.0) || scaled > static_cast<double>(table.size() - 1)) {
    return 0.0;
  }
  const auto i0 = static_cast<std::size_t>(scaled);
  if (i0 + 1 >= table.size()) {
    return table.back();
  }
  const double frac = scaled - static_cast<double>(i0);
  return table[i0] + frac * (table[i0 + 1] - table[i0]);
}

double WaveletFamily::scaling_value(double t) const { return lookup(tables_->phi, t); }
double WaveletFamily::wavelet_value(double t) const { return lookup(tables_->psi, t); }

std::complex<double> WaveletFamily::lowpass_mask(double xi) const {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t l = 0; l < lowpass_.size(); ++l) {
    acc += lowpass_[l] * std::polar(1.0, -static_cast<double>(l) * xi);
  }
  return acc / std::numbers::sqrt2;
}

std::complex<double> WaveletFamily::highpass_mask(double xi) const {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t l = 0; l < highpass_.size(); ++l) {
    acc += highpass_[l] * std::polar(1.0, -static_cast<double>(l) * xi);
  }
  return acc / std::numbers::sqrt2;
}

std::complex<double> WaveletFamily::scaling_fourier(double omega) const {
  std::complex<double> prod{1.0, 0.0};
  double xi = omega;
  for (int r = 0; r < 80; ++r) {
    xi *= 0.5;
    if (std::abs(xi) < 1e-18) {
      break;
    }
    prod *= lowpass_mask(xi);
    if (prod == 0.0) {
      break;
    }
  }
  return prod;
}

std::complex<double> WaveletFamily::wavelet_fourier(double omega) const {
  return highpass_mask(0.5 * omega) * scaling_fourier(0.5 * omega);
}

double WaveletFamily::wavelet_sup() const {
  double best = 0.0;
  for (double v : tables_->psi) {
    best = std::max(best, std::abs(v));
  }
  return best;
}

double WaveletFamily::wavelet_hoelder_seminorm(double alpha) const {
  const auto& psi = tables_->psi;
  const double step = 1.0 / static_cast<double>(std::size_t{1} << kTableDepth);
  double best = 0.0;
  for (std::size_t lag = 1; lag < psi.size(); lag *= 2) {
    const double denom = std::pow(static_cast<double>(lag) * step, alpha);
    for (std::size_t i = 0; i + lag < psi.size(); ++i) {
      best = std::max(best, std::abs(psi[i + lag] - psi[i]) / denom);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

WaveletCoefficients::WaveletCoefficients(int max_level, Convention convention)
    : max_level_(max_level), convention_(convention) {
  if (max_level < 0 || max_level > 30) {
    throw std::invalid_argument("wavelet coefficients: max level out of range");
  }
  values_.assign(count_for_level(max_level), 0.0);
}

WaveletCoefficients::WaveletCoefficients(int max_level, Convention convention, std::vector<double> flat)
    : WaveletCoefficients(max_level, convention) {
  if (flat.size() != values_.size()) {
    throw std::invalid_argument("wavelet coefficients: expected " + std::to_string(values_.size()) +
                                " entries for level " + std::to_string(max_level) + ", got " +
                                std::to_string(flat.size()));
  }
  values_ = std::move(flat);
}

std::span<const double> WaveletCoefficients::detail(int level) const {
  if (level < 0 || level > max_level_) {
    throw std::out_of_range("wavelet coefficients: level out of range");
  }
  const std::size_t start = std::size_t{1} << level;
  return std::span<const double>(values_).subspan(start, start);
}

std::span<double> WaveletCoefficients::detail(int level) {
  if (level < 0 || level > max_level_) {
    throw std::out_of_range("wavelet coefficients: level out of range");
  }
  const std::size_t start = std::size_t{1} << level;
  return std::span<double>(values_).subspan(start, start);
}

int WaveletCoefficients::level_of(std::size_t flat_position) {
  if (flat_position < 2) {
    return 0;
  }
  return std::bit_width(flat_position) - 1;
}

WaveletIndex WaveletCoefficients::index_of(std::size_t flat_position) {
  if (flat_position == 0) {
    return {0, Generator::F, 0};
  }
  const int level = level_of(flat_position);
  return {level, Generator::M, flat_position - (std::size_t{1} << level)};
}

std::size_t WaveletCoefficients::flat_index(const WaveletIndex& index) {
  if (index.generator == Generator::F) {
    return 0;
  }
  return (std::size_t{1} << index.level) + index.translation;
}

WaveletCoefficients WaveletCoefficients::to(Convention target) const {
  if (target == convention_) {
    return *this;
  }
  WaveletCoefficients out(max_level_, target);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double factor = std::exp2(0.5 * level_of(i));
    out.values_[i] = (target == Convention::Lambda) ? values_[i] * factor : values_[i] / factor;
  }
  return out;
}

WaveletCoefficients WaveletCoefficients::truncated(int level) const {
  WaveletCoefficients out = *this;
  if (level < 0) {
    std::fill(out.values_.begin(), out.values_.end(), 0.0);
    return out;
  }
  if (level >= max_level_) {
    return out;
  }
  std::fill(out.values_.begin() + static_cast<long>(count_for_level(level)), out.values_.end(), 0.0);
  return out;
}

// ---------------------------------------------------------------------------

WaveletCoefficients analyze(std::span<const double> samples, const WaveletFamily& family) {
  const std::size_t n = samples.size();
  if (!is_power_of_two(n) || n < 2) {
    throw std::invalid_argument("analyze: sample count must be a power of two, got " + std::to_string(n));
  }
  if (n < family.support_length()) {
    throw std::invalid_argument("analyze: sample count shorter than the wavelet support");
  }
  const int levels = log2_exact(n);
  const auto h = family.lowpass();
  const auto g = family.highpass();

  WaveletCoefficients out(levels - 1, Convention::U);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> approx(samples.begin(), samples.end());
  for (double& v : approx) {
    v *= scale;
  }
  std::vector<double> next;
  for (int level = levels - 1; level >= 0; --level) {
    const std::size_t len = std::size_t{2} << level;
    const std::size_t half = len / 2;
    next.assign(half, 0.0);
    auto detail = out.detail(level);
    for (std::size_t k = 0; k < half; ++k) {
      double a = 0.0;
      double d = 0.0;
      for (std::size_t l = 0; l < h.size(); ++l) {
        const double v = approx[(2 * k + l) % len];
        a += h[l] * v;
        d += g[l] * v;
      }
      next[k] = a;
      detail[k] = d;
    }
    approx.swap(next);
  }
  out.flat()[0] = approx[0];
  return out;
}

std::vector<double> synthesize(const WaveletCoefficients& coeffs, const WaveletFamily& family,
                               std::size_t grid_size) {
  if (!is_power_of_two(grid_size)) {
    throw std::invalid_argument("synthesize: grid size must be a power of two");
  }
  const int target = log2_exact(grid_size);
  if (target < coeffs.max_level() + 1) {
    throw std::invalid_argument("synthesize: grid of " + std::to_string(grid_size) +
                                " samples cannot resolve coefficients up to level " +
                                std::to_string(coeffs.max_level()));
  }
  const WaveletCoefficients u = coeffs.to(Convention::U);
  const auto h = family.lowpass();
  const auto g = family.highpass();

  std::vector<double> approx{u.scaling()};
  std::vector<double> next;
  for (int level = 0; level < target; ++level) {
    const std::size_t half = std::size_t{1} << level;
    const std::size_t len = 2 * half;
    next.assign(len, 0.0);
    const bool has_detail = level <= u.max_level();
    for (std::size_t k = 0; k < half; ++k) {
      const double a = approx[k];
      const double d = has_detail ? u.detail(level)[k] : 0.0;
      for (std::size_t l = 0; l < h.size(); ++l) {
        next[(2 * k + l) % len] += h[l] * a + g[l] * d;
      }
    }
    approx.swap(next);
  }
  const double scale = std::sqrt(static_cast<double>(grid_size));
  for (double& v : approx) {
    v *= scale;
  }
  return approx;
}

double evaluate_basis(const WaveletIndex& index, const WaveletFamily& family, double x) {
  index.validate();
  const double scale = std::exp2(index.level);
  const double support = static_cast<double>(family.support_length());
  const double base = scale * wrap_unit(x) - static_cast<double>(index.translation);
  const auto first = static_cast<long>(std::ceil(-base / scale));
  const auto last = static_cast<long>(std::floor((support - base) / scale));
  double acc = 0.0;
  for (long l = first; l <= last; ++l) {
    const double t = base + scale * static_cast<double>(l);
    acc += index.generator == Generator::F ? family.scaling_value(t) : family.wavelet_value(t);
  }
  return std::sqrt(scale) * acc;
}

std::complex<double> basis_fourier_coefficient(const WaveletIndex& index, const WaveletFamily& family,
                                               long k) {
  index.validate();
  const double scale = std::exp2(index.level);
  const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / scale;
  const std::complex<double> transform =
      index.generator == Generator::F ? family.scaling_fourier(omega) : family.wavelet_fourier(omega);
  const double phase = -omega * static_cast<double>(index.translation);
  return std::polar(1.0 / std::sqrt(scale), phase) * transform;
}

double basis_sup_norm(int level, Generator generator, const WaveletFamily& family) {
  WaveletIndex index{level, generator, 0};
  index.validate();
  const double support = static_cast<double>(family.support_length());
  const double scale = std::exp2(level);
  if (generator == Generator::M && scale >= support) {
    return std::sqrt(scale) * family.wavelet_sup();
  }
  // Overlapping periodization: sample on the table grid of the argument.
  const std::size_t per_unit = std::size_t{1} << WaveletFamily::kTableDepth;
  const std::size_t samples = static_cast<std::size_t>(scale) * per_unit;
  double best = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(samples);
    best = std::max(best, std::abs(evaluate_basis(index, family, x)));
  }
  return best;
}

BasisConstants measure_basis_constants(const WaveletFamily& family, double alpha, int max_level) {
  if (max_level < 1) {
    throw std::invalid_argument("measure_basis_constants: need at least two levels");
  }
  const double support = static_cast<double>(family.support_length());
  const double psi_hoelder = family.wavelet_hoelder_seminorm(alpha);
  std::vector<double> log_sup;
  std::vector<double> log_hoelder;
  for (int j = 0; j <= max_level; ++j) {
    const double scale = std::exp2(j);
    log_sup.push_back(std::log2(basis_sup_norm(j, Generator::M, family)));
    double hoelder;
    if (scale >= support) {
      hoelder = std::sqrt(scale) * std::pow(scale, alpha) * psi_hoelder;
    } else {
      const std::size_t samples = static_cast<std::size_t>(scale) << WaveletFamily::kTableDepth;
      std::vector<double> values(samples);
      for (std::size_t i = 0; i < samples; ++i) {
        values[i] = evaluate_basis({j, Generator::M, 0}, family,
                                   static_cast<double>(i) / static_cast<double>(samples));
      }
      hoelder = 0.0;
      for (std::size_t lag = 1; lag <= samples / 2; lag *= 2) {
        const double denom = std::pow(static_cast<double>(lag) / static_cast<double>(samples), alpha);
        for (std::size_t i = 0; i < samples; ++i) {
          hoelder = std::max(hoelder, std::abs(values[(i + lag) % samples] - values[i]) / denom);
        }
      }
    }
    log_hoelder.push_back(std::log2(hoelder));
  }
  auto slope = [&](const std::vector<double>& ys) {
    const double n = static_cast<double>(ys.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double x = static_cast<double>(j);
      sx += x;
      sy += ys[j];
      sxx += x * x;
      sxy += x * ys[j];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  BasisConstants out;
  out.alpha = alpha;
  out.b = slope(log_sup);
  out.a = slope(log_hoelder);
  double c = 0.0;
  for (int j = 0; j <= max_level; ++j) {
    c = std::max(c, std::exp2(log_sup[j] - out.b * j));
    c = std::max(c, std::exp2(log_hoelder[j] - out.a * j));
  }
  out.C = c;
  return out;
}

}  // namespace varbesov
