#pragma once

#include <cstdint>
#include <random>

namespace ddopt {

/// The engine's only random source. mt19937_64 output is fixed by the standard,
/// so seeded streams are identical on every conforming library.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Modulo bias is below 2^-60 for the small n used here.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

/// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace ddopt
