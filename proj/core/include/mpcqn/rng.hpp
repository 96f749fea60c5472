// SPDX-License-Identifier: MIT
/// \file rng.hpp
/// \brief Deterministic random number generation with explicit stream derivation.
///
/// Every random draw in the library flows through this header.  Independent
/// streams are derived from a root seed plus integer identifiers, and all
/// floating-point draws are built from raw 64-bit words with fixed arithmetic
/// (no implementation-defined standard-library distributions), so a given
/// seed reproduces bit-identical results run after run.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mpcqn {

/// One step of the SplitMix64 generator: advances \p state, returns a word.
inline std::uint64_t split_mix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Hash-combines a seed with one identifier.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id) {
  std::uint64_t s = seed ^ (id + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  return split_mix64(s);
}

/// Derives an independent stream seed from a root seed and up to three
/// integer identifiers (for example run seed, initial-condition index).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t id0,
                                 std::uint64_t id1 = 0, std::uint64_t id2 = 0) {
  return mix_seed(mix_seed(mix_seed(root, id0), id1), id2);
}

/// Seeded generator producing uniform and Gaussian doubles.
///
/// The core engine is std::mt19937_64, whose output sequence is fully
/// specified by the standard; uniforms use the top 53 bits of each word and
/// Gaussians use Box-Muller, so every draw is reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  /// Uniform integer in [0, n); n must be positive.  Unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpcqn
