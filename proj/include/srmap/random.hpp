#pragma once

#include <cstdint>
#include <random>

namespace srmap {

using Rng = std::mt19937_64;

// The standard distributions are implementation-defined; these two are not,
// so seeded runs produce the same artifacts with any standard library.

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace srmap
