#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace compselect {

/// Uniform integer in [0, n) by rejection sampling on raw engine output, so
/// draws are identical on every standard library (distributions are not).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace compselect
