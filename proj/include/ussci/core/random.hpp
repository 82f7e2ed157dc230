#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ussci {

/// Counter-based generator: every draw is a pure function of (seed, stream, index),
/// so per-pixel sampling gives the same result at any thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t bits(std::uint64_t index) const noexcept { return mix(key_ + index * kGolden); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const noexcept {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t index, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>(uniform(index) * static_cast<double>(n));
  }

  /// Standard normal via Box-Muller on two derived uniforms.
  double normal(std::uint64_t index) const noexcept {
    const double u1 = 1.0 - uniform(2 * index);  // (0, 1]
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace ussci
