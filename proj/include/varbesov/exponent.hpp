#pragma once

#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

/// \file
/// Variable exponent fields on the 1-torus.
///
/// A field houses one of the position-dependent indices used throughout the
/// library: smoothness s(x), integrability q(x), the comparison index t(x).
/// Only closed-form shapes are representable so that the infimum/supremum can
/// be certified numerically when the field is built.

namespace varbesov {

struct ConstantShape {
  double value = 0.0;
};

/// c0 + sum_k (a_k cos(2 pi k x) + b_k sin(2 pi k x)), k = 1, 2, ...
struct TrigShape {
  double c0 = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
};

/// Periodic plateau: `low` outside the arc [rise_at, fall_at) (taken forward
/// mod 1) and `high` inside it, with C^1 smoothstep transitions of total
/// width `width` centred on each edge.
struct RampShape {
  double low = 0.0;
  double high = 1.0;
  double rise_at = 0.25;
  double fall_at = 0.75;
  double width = 0.1;
};

class ExponentField {
 public:
  using Shape = std::variant<ConstantShape, TrigShape, RampShape>;

  explicit ExponentField(Shape shape);

  static ExponentField constant(double value);
  static ExponentField trig(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs = {});
  static ExponentField ramp(double low, double high, double rise_at, double fall_at, double width);

  /// Evaluates at x; x is reduced mod 1 first.
  double operator()(double x) const;

  double lower_bound() const { return lower_; }
  double upper_bound() const { return upper_; }
  bool is_constant() const;
  const Shape& shape() const { return shape_; }

  /// The field x -> g(x) + sigma.
  ExponentField shifted(double sigma) const;

 private:
  Shape shape_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

inline double evaluate(const ExponentField& field, double x) { return field(x); }

/// Throws std::invalid_argument unless 1 <= q- <= q+ < infinity.
void require_integrability_exponent(const ExponentField& q);

/// Supremum and infimum of a continuous 1-periodic function, by grid search
/// (2^10 nodes, doubled until the change drops below 1e-9) and a Brent polish
/// around the best node.
struct Extrema {
  double min = 0.0;
  double max = 0.0;
};
Extrema certified_extrema(const std::function<double(double)>& f);

/// max over grid pairs of |g(x)-g(y)| log(e + 1/|x-y|), torus metric.
double log_hoelder_constant(const ExponentField& field, std::size_t grid_size);

/// max(sigma_q - s-, s+) with sigma_q = n (1/min(1, q-) - 1).
double regularity_threshold(const ExponentField& s, const ExponentField& q, int dimension = 1);

/// sup_x (t(x) - s(x) + n/q+). Negative certifies convergence of the random
/// series in the t-modular; zero is inconclusive.
double gap_condition(const ExponentField& t, const ExponentField& s, const ExponentField& q,
                     int dimension = 1);

/// Growth/Hoelder constants of the basis: |Psi_j| <= C 2^{j n b} and
/// |Psi_j(x) - Psi_j(y)| <= C 2^{j n a} |x-y|^alpha.
struct HoelderBudget {
  double b = 0.5;
  double a = 1.5;
  double alpha = 1.0;
  double theta = 1.0;

  void validate() const;
};

}  // namespace varbesov
