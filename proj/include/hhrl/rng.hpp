#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hhrl {

// All stochastic draws in the project go through these helpers rather than
// std::*_distribution, which is not guaranteed to produce the same sequence
// across standard-library implementations. Determinism contract: same seed,
// same sequence, everywhere.

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and a stream id.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t x = master ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  splitmix64(x);
  return splitmix64(x);
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n). n must be >= 1.
inline int uniform_int(std::mt19937_64& rng, int n) {
  int k = static_cast<int>(uniform01(rng) * n);
  return k >= n ? n - 1 : k;
}

// Marsaglia polar method; the antithetic mate is discarded so the generator
// state never depends on call history.
inline double gaussian(std::mt19937_64& rng) {
  for (;;) {
    double u = 2.0 * uniform01(rng) - 1.0;
    double v = 2.0 * uniform01(rng) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace hhrl
