#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gapest {

/// SplitMix64 finalizer. Used for seed derivation only.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream-splitting rule: replicate `index` of a run seeded with `base`
/// draws from an engine seeded with splitmix64(splitmix64(base) ^ index).
/// Nested splits (bootstrap redraws, per-window streams) apply the rule
/// again to the derived seed.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(base) ^ index);
}

/// Portable random source: mt19937_64 (bit-exact across standard
/// libraries) with hand-written transforms, since std::*_distribution
/// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) %
           (n == 0 ? 1 : n);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gapest
