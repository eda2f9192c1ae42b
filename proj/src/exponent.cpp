#include "varbesov/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/tools/minima.hpp>

namespace varbesov {
namespace {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Signed offset in [-1/2, 1/2).
double wrap_signed(double x) {
  double r = wrap_unit(x + 0.5) - 0.5;
  return r;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double torus_distance(double x, double y) { return std::abs(wrap_signed(x - y)); }

struct Evaluator {
  double x;

  double operator()(const ConstantShape& c) const { return c.value; }

  double operator()(const TrigShape& t) const {
    const double w = 2.0 * std::numbers::pi * x;
    double v = t.c0;
    for (std::size_t k = 0; k < t.cos_coeffs.size(); ++k) {
      v += t.cos_coeffs[k] * std::cos(static_cast<double>(k + 1) * w);
    }
    for (std::size_t k = 0; k < t.sin_coeffs.size(); ++k) {
      v += t.sin_coeffs[k] * std::sin(static_cast<double>(k + 1) * w);
    }
    return v;
  }

  double operator()(const RampShape& r) const {
    const double half = 0.5 * r.width;
    const double dr = wrap_signed(x - r.rise_at);
    const double df = wrap_signed(x - r.fall_at);
    double h;
    if (std::abs(dr) < half) {
      h = smoothstep(dr / r.width + 0.5);
    } else if (std::abs(df) < half) {
      h = 1.0 - smoothstep(df / r.width + 0.5);
    } else {
      const double arc = wrap_unit(r.fall_at - r.rise_at);
      h = wrap_unit(x - r.rise_at) < arc ? 1.0 : 0.0;
    }
    return r.low + (r.high - r.low) * h;
  }
};

void validate_shape(const ExponentField::Shape& shape) {
  if (const auto* r = std::get_if<RampShape>(&shape)) {
    const double arc = wrap_unit(r->fall_at - r->rise_at);
    if (!(r->width > 0.0)) {
      throw std::invalid_argument("ramp field: width must be positive");
    }
    if (arc == 0.0 || r->width > std::min(arc, 1.0 - arc)) {
      throw std::invalid_argument("ramp field: transitions overlap (width exceeds arc length)");
    }
  }
}

}  // namespace

Extrema certified_extrema(const std::function<double(double)>& f) {
  std::size_t n = std::size_t{1} << 10;
  Extrema prev{};
  double argmin = 0.0;
  double argmax = 0.0;
  for (int round = 0; round < 11; ++round) {
    Extrema cur{f(0.0), f(0.0)};
    argmin = argmax = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(n);
      const double v = f(x);
      if (v < cur.min) {
        cur.min = v;
        argmin = x;
      }
      if (v > cur.max) {
        cur.max = v;
        argmax = x;
      }
    }
    const bool settled =
        round > 0 && std::abs(cur.min - prev.min) < 1e-9 && std::abs(cur.max - prev.max) < 1e-9;
    prev = cur;
    if (settled) {
      break;
    }
    n *= 2;
  }

  const double h = 1.0 / static_cast<double>(n);
  const int bits = std::numeric_limits<double>::digits / 2;
  auto lo = boost::math::tools::brent_find_minima([&](double x) { return f(x); }, argmin - h, argmin + h,
                                                  bits);
  auto hi = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, argmax - h,
                                                  argmax + h, bits);
  prev.min = std::min(prev.min, lo.second);
  prev.max = std::max(prev.max, -hi.second);
  return prev;
}

ExponentField::ExponentField(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  if (const auto* c = std::get_if<ConstantShape>(&shape_)) {
    lower_ = upper_ = c->value;
    return;
  }
  const auto ext = certified_extrema([this](double x) { return (*this)(x); });
  lower_ = ext.min;
  upper_ = ext.max;
}

ExponentField ExponentField::constant(double value) { return ExponentField(ConstantShape{value}); }

ExponentField ExponentField::trig(double c0, std::vector<double> cos_coeffs,
                                  std::vector<double> sin_coeffs) {
  return ExponentField(TrigShape{c0, std::move(cos_coeffs), std::move(sin_coeffs)});
}

ExponentField ExponentField::ramp(double low, double high, double rise_at, double fall_at,
                                  double width) {
  return ExponentField(RampShape{low, high, rise_at, fall_at, width});
}

double ExponentField::operator()(double x) const {
  return std::visit(Evaluator{wrap_unit(x)}, shape_);
}

bool ExponentField::is_constant() const {
  return std::holds_alternative<ConstantShape>(shape_) || lower_ == upper_;
}

ExponentField ExponentField::shifted(double sigma) const {
  struct Shift {
    double sigma;
    ExponentField::Shape operator()(ConstantShape c) const {
      c.value += sigma;
      return c;
    }
    ExponentField::Shape operator()(TrigShape t) const {
      t.c0 += sigma;
      return t;
    }
    ExponentField::Shape operator()(RampShape r) const {
      r.low += sigma;
      r.high += sigma;
      return r;
    }
  };
  return ExponentField(std::visit(Shift{sigma}, shape_));
}

void require_integrability_exponent(const ExponentField& q) {
  if (!(q.lower_bound() >= 1.0) || !std::isfinite(q.upper_bound())) {
    throw std::invalid_argument("integrability exponent must satisfy 1 <= q- <= q+ < inf (q- = " +
                                std::to_string(q.lower_bound()) + ")");
  }
}

double log_hoelder_constant(const ExponentField& field, std::size_t grid_size) {
  if (grid_size < 64) {
    throw std::invalid_argument("log_hoelder_constant: grid_size must be >= 64");
  }
  if (std::holds_alternative<ConstantShape>(field.shape())) {
    return 0.0;
  }
  std::vector<double> values(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    values[i] = field(static_cast<double>(i) / static_cast<double>(grid_size));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(grid_size);
    for (std::size_t j = i + 1; j < grid_size; ++j) {
      const double xj = static_cast<double>(j) / static_cast<double>(grid_size);
      const double d = torus_distance(xi, xj);
      const double c = std::abs(values[i] - values[j]) * std::log(std::numbers::e + 1.0 / d);
      best = std::max(best, c);
    }
  }
  return best;
}

double regularity_threshold(const ExponentField& s, const ExponentField& q, int dimension) {
  if (!(q.lower_bound() > 0.0)) {
    throw std::invalid_argument("regularity_threshold: q- must be positive");
  }
  const double sigma = dimension * (1.0 / std::min(1.0, q.lower_bound()) - 1.0);
  return std::max(sigma - s.lower_bound(), s.upper_bound());
}

double gap_condition(const ExponentField& t, const ExponentField& s, const ExponentField& q,
                     int dimension) {
  const double offset = dimension / q.upper_bound();
  if (t.is_constant() && s.is_constant()) {
    return t.upper_bound() - s.lower_bound() + offset;
  }
  const auto ext = certified_extrema([&](double x) { return t(x) - s(x); });
  return ext.max + offset;
}

void HoelderBudget::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("HoelderBudget: alpha must lie in (0, 1]");
  }
  if (!(theta > 0.0 && theta < 2.0)) {
    throw std::invalid_argument("HoelderBudget: theta must lie in (0, 2)");
  }
  if (!(a > b)) {
    throw std::invalid_argument("HoelderBudget: requires a > b");
  }
}

}  // namespace varbesov
