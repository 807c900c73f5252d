// SPDX-License-Identifier: Apache-2.0
//
// Splittable pseudo-random streams built on splitmix64. A (seed, stream,
// index) triple addresses an independent substream, so Monte Carlo blocks
// can be generated in any order, or in parallel, with identical results.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace idet::rng {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  /// Uses the radial Box-Muller form: exactly two uniforms per draw.
  std::complex<double> next_cgaussian(double variance) {
    double u1 = next_double();
    double u2 = next_double();
    // avoid log(0); shifts u1 into (0, 1]
    double r = std::sqrt(-std::log(1.0 - u1) * variance);
    double phi = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  /// Real Gaussian N(0, variance).
  double next_gaussian(double variance) {
    auto z = next_cgaussian(2.0 * variance);
    return z.real();
  }

 private:
  std::uint64_t state_;
};

/// Derives the substream generator for (seed, stream_id, index).
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t stream_id,
                            std::uint64_t index) {
  std::uint64_t s = seed;
  s = splitmix64_next(s) ^ (stream_id * 0xd6e8feb86659fd93ULL);
  s = splitmix64_next(s) ^ (index * 0xa5a5a5a5a5a5a5a5ULL);
  splitmix64_next(s);
  return SplitMix64(s);
}

}  // namespace idet::rng
