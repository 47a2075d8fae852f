// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

namespace flowmut {

/// Deterministic seeded generator used everywhere randomness is needed.
///
/// The stream is SplitMix64 (Steele, Lea & Flood's mix function with a
/// golden-ratio increment). The algorithm is fixed so that a (seed, draw
/// sequence) pair replays identically on any platform; std::uniform_*
/// distributions are implementation-defined and deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), using the top 53 bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform index in [0, n). n must be nonzero. Bounded by Lemire's
  /// multiply-shift; the modulo bias is below 2^-64 for any practical n.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool coin() { return (next_u64() & 1ULL) != 0; }

  /// Child stream derived from this one; used to give independent
  /// substreams to independent tasks without sharing draw order.
  Rng fork() { return Rng(next_u64()); }

 private:
  std::uint64_t state_;
};

}  // namespace flowmut
