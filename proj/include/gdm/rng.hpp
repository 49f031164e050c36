#pragma once

// Seed derivation. Every randomized operation takes a root seed and derives
// independent streams from it:
//
//   stream_seed(root, tag, index) = splitmix64(splitmix64(root ^ fnv1a(tag)) + index)
//
// and seeds a 64-bit Mersenne Twister with the result. Draws go through the
// standard <random> distributions, so streams are stable for a given
// standard library; matching them across languages is not a goal.

#include <cstdint>
#include <random>
#include <string_view>

namespace gdm {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a(tag)) + index);
}

inline Engine make_engine(std::uint64_t root, std::string_view tag, std::uint64_t index = 0) {
  return Engine(stream_seed(root, tag, index));
}

}  // namespace gdm
