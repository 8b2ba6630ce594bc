// Portable seeded randomness. std::mt19937_64 has a standardized output
// sequence; the helpers below avoid the implementation-defined standard
// distributions so generated data is identical across standard libraries.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mrad {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-stage seed derivation: splitmix64(master ^ fnv1a(stage) + index).
/// Every random stage of the pipeline draws its seed through this function
/// with a fixed stage tag ("generator", "attention", "detector", ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Lemire-free modulo with rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Poisson(mean) by Knuth's product method, splitting large means into
  /// chunks of at most 30 (sum of independent Poissons is Poisson).
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 0.0) {
      const double chunk = mean > 30.0 ? 30.0 : mean;
      mean -= chunk;
      const double limit = std::exp(-chunk);
      double p = uniform();
      while (p > limit) {
        ++total;
        p *= uniform();
      }
    }
    return total;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mrad
