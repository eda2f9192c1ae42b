#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace varbesov {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, used to name independent substreams ("prior", "noise", ...).
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: the state is derived from a key, so a draw keyed
/// by (seed, stream, sample, coefficient) does not depend on what was drawn
/// before it. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : state_(mix64(key)) {}

  static CounterRng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t key = mix64(seed);
    for (std::uint64_t c : counters) key = mix64(key ^ mix64(c + 0x632be59bd9b4e019ULL));
    return CounterRng(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

namespace streams {
inline constexpr std::uint64_t kPrior = fnv1a("prior");
inline constexpr std::uint64_t kNoise = fnv1a("noise");
inline constexpr std::uint64_t kMcmc = fnv1a("mcmc");
inline constexpr std::uint64_t kStarts = fnv1a("starts");
}  // namespace streams

}  // namespace varbesov
