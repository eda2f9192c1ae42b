#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "varbesov/exponent.hpp"

namespace varbesov {

/// F is the level-0 scaling function (the constant 1 once periodized),
/// M the mother wavelet.
enum class Generator : std::uint8_t { F, M };

struct WaveletIndex {
  int level = 0;
  Generator generator = Generator::M;
  std::size_t translation = 0;

  void validate() const;
};

/// Orthonormal compactly supported Daubechies family with `order` vanishing
/// moments (filter length 2*order, support [0, 2*order - 1]).
class WaveletFamily {
 public:
  explicit WaveletFamily(int order = 4);

  /// max(4, ceil(regularity_threshold(s, q)) + 1).
  static WaveletFamily for_exponents(const ExponentField& s, const ExponentField& q);

  int order() const { return order_; }
  std::size_t support_length() const { return 2 * static_cast<std::size_t>(order_) - 1; }
  std::span<const double> lowpass() const { return lowpass_; }
  std::span<const double> highpass() const { return highpass_; }

  /// phi(t) and psi(t) on the real line: exact values on the dyadic grid of
  /// depth 12, linear interpolation between grid points.
  double scaling_value(double t) const;
  double wavelet_value(double t) const;

  /// Continuous Fourier transforms int f(t) e^{-i omega t} dt via the
  /// infinite product of the refinement mask.
  std::complex<double> scaling_fourier(double omega) const;
  std::complex<double> wavelet_fourier(double omega) const;

  /// Largest |psi| and largest alpha-Hoelder quotient of psi over the table.
  double wavelet_sup() const;
  double wavelet_hoelder_seminorm(double alpha) const;

  static constexpr int kTableDepth = 12;

 private:
  struct Tables {
    std::vector<double> phi;
    std::vector<double> psi;
  };

  double lookup(const std::vector<double>& table, double t) const;
  std::complex<double> lowpass_mask(double xi) const;
  std::complex<double> highpass_mask(double xi) const;

  int order_;
  std::vector<double> lowpass_;
  std::vector<double> highpass_;
  std::shared_ptr<const Tables> tables_;
};

/// lambda^j_{Gm} = 2^{j/2} u^j_{Gm}; u-convention entries are L2 inner
/// products with the periodized basis.
enum class Convention : std::uint8_t { Lambda, U };

/// Coefficients of the periodized basis up to level J, stored flat in the
/// order (j ascending, F before M, m ascending): [F, M^0_0, M^1_0, M^1_1, ...].
/// Total count 2^{J+1}.
class WaveletCoefficients {
 public:
  WaveletCoefficients() = default;
  WaveletCoefficients(int max_level, Convention convention);
  WaveletCoefficients(int max_level, Convention convention, std::vector<double> flat);

  int max_level() const { return max_level_; }
  Convention convention() const { return convention_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }

  double scaling() const { return values_[0]; }
  std::span<const double> detail(int level) const;
  std::span<double> detail(int level);

  double operator[](const WaveletIndex& index) const { return values_[flat_index(index)]; }
  double& operator[](const WaveletIndex& index) { return values_[flat_index(index)]; }

  /// Level of the entry at flat position i.
  static int level_of(std::size_t flat_position);
  static WaveletIndex index_of(std::size_t flat_position);
  static std::size_t flat_index(const WaveletIndex& index);
  static std::size_t count_for_level(int max_level) { return std::size_t{2} << max_level; }

  WaveletCoefficients to(Convention target) const;

  /// Copy with every level above `level` set to zero (shape unchanged).
  WaveletCoefficients truncated(int level) const;

 private:
  int max_level_ = 0;
  Convention convention_ = Convention::U;
  std::vector<double> values_ = std::vector<double>(2, 0.0);
};

/// Periodic fast wavelet transform of samples f(i/N), i < N = 2^L. Returns
/// u-convention coefficients up to level L-1, normalised so that the
/// constant function 1 maps to a unit F coefficient.
WaveletCoefficients analyze(std::span<const double> samples, const WaveletFamily& family);

/// Inverse of analyze onto a grid of `grid_size` >= 2^{J+1} samples.
std::vector<double> synthesize(const WaveletCoefficients& coeffs, const WaveletFamily& family,
                               std::size_t grid_size);

/// Psi~^j_{Gm}(x) = sum_l 2^{j/2} psi^G(2^j (x + l) - m).
double evaluate_basis(const WaveletIndex& index, const WaveletFamily& family, double x);

/// int_0^1 Psi~^j_{Gm}(x) e^{-2 pi i k x} dx.
std::complex<double> basis_fourier_coefficient(const WaveletIndex& index, const WaveletFamily& family,
                                               long k);

/// sup_x |Psi~^j_{Gm}(x)|; independent of m.
double basis_sup_norm(int level, Generator generator, const WaveletFamily& family);

/// Empirical constants of |Psi~_j| <= C 2^{jb}, |Psi~_j(x) - Psi~_j(y)| <= C 2^{ja}|x-y|^alpha,
/// fitted over levels 0..max_level from measured sup norms and Hoelder quotients.
struct BasisConstants {
  double C = 0.0;
  double b = 0.0;
  double a = 0.0;
  double alpha = 1.0;
};
BasisConstants measure_basis_constants(const WaveletFamily& family, double alpha, int max_level);

}  // namespace varbesov
