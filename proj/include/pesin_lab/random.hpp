#pragma once

#include <cstdint>
#include <random>

namespace pesin_lab {

/// splitmix64 finalizer, used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Generator for sample `index` of stream `tag` under a global seed. Each
/// sample owns its generator, so results do not depend on scheduling.
inline Rng substream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
  return Rng(mix64(mix64(seed ^ mix64(tag)) + index));
}

/// Uniform double in [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace pesin_lab
