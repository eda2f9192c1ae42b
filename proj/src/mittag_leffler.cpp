#include "varbesov/mittag_leffler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace varbesov {
namespace {

using Float50 = boost::multiprecision::cpp_bin_float_50;
using Float100 = boost::multiprecision::cpp_bin_float_100;

constexpr int kMaxSeriesTerms = 4000;
constexpr int kMaxAsymptoticTerms = 2000;

void check_arguments(double alpha, double z, double tol) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("mittag_leffler: alpha must lie in (0, 1]");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("mittag_leffler: tol must be positive");
  }
  if (!(z <= 0.0)) {
    throw std::invalid_argument("mittag_leffler: z must be nonpositive");
  }
}

/// 1/Gamma(alpha k + 1), k = 0, 1, ..., grown on demand. Snapshots are
/// immutable so readers never see a vector being extended.
template <class Real>
class ReciprocalGammaTable {
 public:
  using Snapshot = std::shared_ptr<const std::vector<Real>>;

  static Snapshot get(double alpha, std::size_t count) {
    static std::mutex mutex;
    static std::map<double, Snapshot> tables;
    std::lock_guard lock(mutex);
    auto& slot = tables[alpha];
    if (!slot || slot->size() < count) {
      auto grown = slot ? std::make_shared<std::vector<Real>>(*slot) : std::make_shared<std::vector<Real>>();
      const Real a(alpha);
      while (grown->size() < count) {
        const Real arg = a * static_cast<int>(grown->size()) + 1;
        grown->push_back(1 / boost::math::tgamma(arg));
      }
      slot = std::move(grown);
    }
    return slot;
  }
};

// log of the k-th series term magnitude: k ln x - lgamma(alpha k + 1).
double log_term(double alpha, double log_x, int k) {
  return k * log_x - std::lgamma(alpha * k + 1.0);
}

/// Terms needed and the largest term's log, from the double envelope.
struct SeriesPlan {
  int terms = 0;
  double log_peak = 0.0;
};

SeriesPlan plan_series(double alpha, double x, double tol) {
  const double log_x = std::log(x);
  SeriesPlan plan;
  double peak = 0.0;
  // Past the peak, stop once the envelope is far below tol.
  const double log_stop = std::log(tol) - 10.0;
  for (int k = 1; k < kMaxSeriesTerms; ++k) {
    const double lt = log_term(alpha, log_x, k);
    peak = std::max(peak, lt);
    if (lt < peak && lt < log_stop) {
      plan.terms = k + 1;
      plan.log_peak = peak;
      return plan;
    }
  }
  throw std::domain_error("mittag_leffler: power series did not converge within the term cap");
}

template <class Real>
double series_in(double alpha, double x, int terms) {
  const auto snapshot = ReciprocalGammaTable<Real>::get(alpha, static_cast<std::size_t>(terms));
  const auto& table = *snapshot;
  const Real step = -Real(x);
  Real power = 1;
  Real sum = 0;
  for (int k = 0; k < terms; ++k) {
    sum += power * table[static_cast<std::size_t>(k)];
    power *= step;
  }
  return static_cast<double>(sum);
}

double series_double(double alpha, double x, int terms) {
  double sum = 0.0;
  double carry = 0.0;
  double power = 1.0;
  for (int k = 0; k < terms; ++k) {
    const double term = power / std::tgamma(alpha * k + 1.0);
    // Kahan compensation.
    const double y = term - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
    power *= -x;
  }
  return sum;
}

}  // namespace

double mittag_leffler_series(double alpha, double z, double tol) {
  check_arguments(alpha, z, tol);
  const double x = -z;
  if (x == 0.0) return 1.0;
  const auto plan = plan_series(alpha, x, tol);
  const double digits_lost = plan.log_peak / std::log(10.0);
  if (digits_lost < 2.0 && plan.terms < 170) {
    return series_double(alpha, x, plan.terms);
  }
  if (digits_lost < 30.0) {
    return series_in<Float50>(alpha, x, plan.terms);
  }
  if (digits_lost < 80.0) {
    return series_in<Float100>(alpha, x, plan.terms);
  }
  throw std::domain_error("mittag_leffler: power series cancellation exceeds 100-digit arithmetic");
}

std::optional<double> mittag_leffler_asymptotic(double alpha, double z, double tol) {
  check_arguments(alpha, z, tol);
  const double x = -z;
  if (x == 0.0) return std::nullopt;
  const double log_x = std::log(x);
  double sum = 0.0;
  double previous_envelope = std::numeric_limits<double>::infinity();
  for (int k = 1; k < kMaxAsymptoticTerms; ++k) {
    // 1/Gamma(1 - a) = Gamma(a) sin(pi a) / pi with a = alpha k. The envelope
    // drops the sine so that vanishing terms at the poles still measure the
    // size of the remainder.
    const double a = alpha * k;
    const double envelope = std::exp(std::lgamma(a) - k * log_x) / std::numbers::pi;
    const double sine = boost::math::sin_pi(a);
    // Relative once a nonzero term is in, so tiny values keep their digits.
    const double scale = sum != 0.0 ? std::min(1.0, std::abs(sum)) : 1.0;
    const bool leading = k == 1 && sine != 0.0;
    if (!leading && envelope < tol * scale) return sum;
    if (envelope > previous_envelope) return std::nullopt;
    previous_envelope = envelope;
    const double sign_z = (k % 2 == 0) ? 1.0 : -1.0;  // sign of z^{-k}
    sum -= sign_z * envelope * sine;
  }
  return std::nullopt;
}

MittagLefflerResult mittag_leffler_detail(double alpha, double z, double tol) {
  check_arguments(alpha, z, tol);
  const double x = -z;
  if (x == 0.0) return {1.0, MittagLefflerRegime::Series};
  MittagLefflerResult result;
  const double scaled = std::pow(x, 1.0 / alpha);
  if (scaled >= std::log(1.0 / tol) + 5.0) {
    if (const auto asym = mittag_leffler_asymptotic(alpha, z, tol)) {
      result.value = *asym;
      result.regime = MittagLefflerRegime::Asymptotic;
      result.value = std::clamp(result.value, 0.0, 1.0);
      return result;
    }
  }
  result.value = std::clamp(mittag_leffler_series(alpha, z, tol), 0.0, 1.0);
  result.regime = MittagLefflerRegime::Series;
  return result;
}

double mittag_leffler(double alpha, double z, double tol) { return mittag_leffler_detail(alpha, z, tol).value; }

}  // namespace varbesov
