#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sofo {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic seed for a substream identified by (seed, keys...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix_seed(seed);
  for (auto k : keys) h = mix_seed(h ^ mix_seed(k + 0x632BE59BD9B4E019ULL));
  return h;
}

}  // namespace sofo
