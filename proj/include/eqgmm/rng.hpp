#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace eqgmm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a fixed bijective mix of 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable seed derivation: derive_seed(seed, {a, b}) depends only on the
/// values, never on call order or thread scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return h;
}

// Stream tags used with derive_seed.
inline constexpr std::uint64_t kStreamData = 0x64617461;    // "data"
inline constexpr std::uint64_t kStreamStarts = 0x73747274;  // "strt"
inline constexpr std::uint64_t kStreamSplits = 0x73706c74;  // "splt"

}  // namespace eqgmm
