#pragma once

#include <cstdint>
#include <random>

namespace resn::detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace resn::detail

namespace resn {

using Rng = std::mt19937_64;

/// Seed of the independent stream number `index` under `seed`. Streams for
/// different indices do not overlap in practice and do not depend on the
/// order in which they are requested.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~index));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t index) { return Rng{derive_seed(seed, index)}; }

}  // namespace resn
