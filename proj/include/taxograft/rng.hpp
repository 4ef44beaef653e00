#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace taxograft {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named sub-stream of a root seed, e.g. stream_seed(seed, "selfsup.negatives").
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(seed, h);
}

inline Rng make_rng(std::uint64_t seed, std::string_view stream) { return Rng(stream_seed(seed, stream)); }

// Uniform index in [0, n). std::uniform_int_distribution is avoided so draws do
// not depend on the standard library implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Container>
void shuffle_in_place(Container& c, Rng& rng) {
  for (std::size_t k = c.size(); k > 1; --k) {
    std::size_t j = uniform_index(rng, k);
    std::swap(c[k - 1], c[j]);
  }
}

}  // namespace taxograft
