#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ceas {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combination of a base seed with stream coordinates, e.g.
// (seed, iteration, sample) or (base_seed, drop).
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(base, path));
}

// Uniform on [0, 1) with 53 random bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ceas
