#pragma once

#include <optional>

namespace varbesov {

enum class MittagLefflerRegime { Series, Asymptotic };

struct MittagLefflerResult {
  double value = 0.0;
  MittagLefflerRegime regime = MittagLefflerRegime::Series;
};

/// E_alpha(z) = sum_k z^k / Gamma(alpha k + 1) for 0 < alpha <= 1, z <= 0,
/// accurate to roughly `tol` in absolute terms; result clamped to [0, 1].
///
/// The power series is used while |z|^{1/alpha} < ln(1/tol) + 5 and the
/// asymptotic expansion -sum_{k<=p} z^-k / Gamma(1 - alpha k) beyond, provided
/// its terms fall below tol before they start growing. The series switches
/// from double to 50- or 100-digit arithmetic when its largest term would
/// swamp double precision.
double mittag_leffler(double alpha, double z, double tol = 1e-12);
MittagLefflerResult mittag_leffler_detail(double alpha, double z, double tol = 1e-12);

/// Each regime on its own, for cross-checks. The asymptotic expansion returns
/// nothing when no truncation reaches `tol`.
double mittag_leffler_series(double alpha, double z, double tol = 1e-12);
std::optional<double> mittag_leffler_asymptotic(double alpha, double z, double tol = 1e-12);

}  // namespace varbesov
