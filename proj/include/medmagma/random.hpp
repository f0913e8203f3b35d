#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace medmagma {

// All randomness in the project flows from a single user seed through
// derive_seed: child streams are keyed by (seed, tag...) so that replicates,
// axes, and purposes get independent, reproducible streams with no global
// state. Mixing is SplitMix64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ tag);
}

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
  return derive_seed(derive_seed(seed, tag), rest...);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// (0, 1] uniform from the engine's raw 64 bits. The stdlib distributions are
// implementation-defined, so draws below are spelled out for reproducibility.
inline double uniform_unit(std::mt19937_64& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

// Box-Muller; the paired sine draw is discarded to keep calls stateless.
inline double standard_normal(std::mt19937_64& eng) {
  double u1 = uniform_unit(eng);
  double u2 = uniform_unit(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

inline double chi_squared_df1(std::mt19937_64& eng) {
  double g = standard_normal(eng);
  return g * g;
}

}  // namespace medmagma
