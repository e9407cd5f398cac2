#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace constell {

// splitmix64; used to decorrelate derived seeds.
inline std::uint64_t mix_u64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// FNV-1a over a byte string.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Derive an independent seed for a named substream. Stream tags keep the
/// pose/noise/init streams of one run from aliasing each other.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
  return mix_u64(base ^ mix_u64(fnv1a(tag)) ^ mix_u64(index * 0x9e3779b97f4a7c15ull + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace constell
