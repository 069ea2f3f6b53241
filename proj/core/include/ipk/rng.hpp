#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace ipk {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent, reproducible engine for a named stream under one
/// master seed. Same (master, name) always yields the same sequence.
inline Rng make_stream(std::uint64_t master_seed, std::string_view name) {
  return Rng(splitmix64(master_seed ^ fnv1a(name)));
}

inline Rng make_stream(std::uint64_t master_seed, std::string_view name, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master_seed ^ fnv1a(name)) + index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

/// Uniform integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  std::uniform_int_distribution<int> d(0, n - 1);
  return d(rng);
}

/// Standard normal via Box-Muller. Stateless (no cached spare value), so the
/// engine state alone fully determines the stream; this keeps checkpointed
/// rng states honest.
inline double normal(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double u1 = 0.0;
  do {
    u1 = d(rng);
  } while (u1 <= 1e-300);
  const double u2 = d(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace ipk
