#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace phylnet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Seed-splitting rule: every random stream in the project is derived from the
// single user-facing seed by hashing a path of integers through SplitMix64,
// e.g. derive_seed(seed, {kChainStream, chain}) or {kZStream, chain, sweep, m}.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed);
  for (auto p : path) s = mix64(s ^ mix64(p));
  return s;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(seed, path));
}

// Stream tags.
inline constexpr std::uint64_t kChainStream = 1;
inline constexpr std::uint64_t kSimulateStream = 2;

}  // namespace phylnet
