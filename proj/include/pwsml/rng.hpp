#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pwsml {

// SplitMix64. Streams are derived from (seed, index) by hashing, so the values
// a sample sees never depend on how many other samples were drawn before it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller; the second variate is discarded.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

/// Independent generator for item `index` of a run seeded with `seed`.
inline SplitMix64 stream(std::uint64_t seed, std::uint64_t index) noexcept {
  return SplitMix64(mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL)));
}

inline SplitMix64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t sub) noexcept {
  return stream(mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL)), sub);
}

}  // namespace pwsml
