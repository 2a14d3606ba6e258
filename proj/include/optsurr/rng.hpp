#pragma once

#include <cstdint>
#include <random>

namespace optsurr {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (stream, index) under a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

namespace streams {
inline constexpr std::uint64_t folds = 0x666f6c64;
inline constexpr std::uint64_t perturbation = 0x70657274;
inline constexpr std::uint64_t datasets = 0x64617461;
}  // namespace streams

}  // namespace optsurr
