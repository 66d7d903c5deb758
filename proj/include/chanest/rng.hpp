#pragma once

#include <cstdint>

namespace chanest {

/// SplitMix64 finalizer. Decorrelates structured seed inputs before they feed
/// an engine, so nearby trial indices do not produce overlapping streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds `value` into `seed`, producing a new independent-looking seed.
/// Not commutative: combine fields in a fixed documented order.
constexpr std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

}  // namespace chanest
