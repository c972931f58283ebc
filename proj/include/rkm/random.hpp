#pragma once

#include <cstdint>
#include <random>

namespace rkm {

/// Seeded engine; std::mt19937_64 output is fully specified by the standard.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits. Distribution objects from
/// the standard library are implementation-defined, so they are avoided
/// wherever results must be reproducible across toolchains.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [lo, hi] (inclusive); rejection sampling, no modulo bias.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

}  // namespace rkm
