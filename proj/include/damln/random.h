#ifndef DAMLN_RANDOM_H_
#define DAMLN_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace damln {

// SplitMix64 finaliser.
inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and stream labels.
inline std::uint64_t DeriveSeed(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = Mix64(seed);
  for (std::uint64_t l : labels) h = Mix64(h ^ Mix64(l + 0x632be59bd9b4e019ULL));
  return h;
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool Bernoulli(Rng& rng, double p) { return Uniform01(rng) < p; }

}  // namespace damln

#endif  // DAMLN_RANDOM_H_
