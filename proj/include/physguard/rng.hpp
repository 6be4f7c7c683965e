#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace physguard {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent, order-free substreams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Seed for a named substream, optionally indexed (segment, client, round...).
constexpr std::uint64_t substream(std::uint64_t seed, std::string_view name,
                                  std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed ^ hash_name(name)) + a) + b);
}

inline Rng make_rng(std::uint64_t seed, std::string_view name, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(substream(seed, name, a, b));
}

// Uniform double in [0, 1) with 53 random bits. Unlike the std distributions
// this is specified bit-for-bit, so draws are identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng);

}  // namespace physguard
