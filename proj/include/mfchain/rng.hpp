// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace mfchain {

/// splitmix64 finalizer (Steele, Lea & Flood 2014). Full-avalanche 64-bit mix.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna 2019) seeded through splitmix64.
///
/// Per-trajectory streams are derived with the documented, release-stable
/// mixing function
///
///   stream_seed = splitmix64_mix(master_seed ^ splitmix64_mix(index + 1))
///
/// so that trajectory `index` always sees the same stream for a given
/// master seed, independent of scheduling or worker count. Uniform doubles
/// are built from the top 53 bits, so the sequence is bit-stable across
/// platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      w = z ^ (z >> 31);
    }
  }

  static RngStream for_trajectory(std::uint64_t master_seed, std::uint64_t index) {
    return RngStream(stream_seed(master_seed, index));
  }

  static std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64_mix(master_seed ^ splitmix64_mix(index + 1));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0,1); rejects exact zeros so that log() is safe.
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Standard normal via Box-Muller (no libc distribution dependence).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mfchain
