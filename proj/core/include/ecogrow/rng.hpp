#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace ecogrow {

// splitmix64 finalizer; derives independent seed streams from (seed, index)
// so that e.g. per-epoch negative sampling is reproducible in isolation.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform draws are built from raw engine output instead of the standard
// distributions, whose results are implementation-defined.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_double(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(rng);
}

// Uniform integer in [0, n), n > 0. Rejection sampling keeps it unbiased.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Standard normal via Box-Muller. Uses two draws per value; no cached state.
inline double normal_double(std::mt19937_64& rng) {
  double u1 = uniform_double(rng);
  while (u1 <= 0.0) u1 = uniform_double(rng);
  const double u2 = uniform_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ecogrow
