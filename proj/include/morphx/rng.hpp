#pragma once

// Deterministic counter-derived random streams. Every stochastic consumer
// (design init, mutation, controller training) pulls from its own stream,
// derived from (master seed, purpose tag, key), so replaying any one of them
// never depends on what the others consumed.

#include <array>
#include <cstdint>
#include <cmath>
#include <numbers>

namespace morphx {

namespace detail {

// splitmix64 finalizer; statistically independent outputs for distinct inputs.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// xoshiro256++ with Box-Muller normals. Not a stdlib engine because the bit
// stream is part of the on-disk reproducibility contract and must not drift
// with the standard library implementation.
class RngStream {
 public:
  RngStream() : RngStream(0) {}

  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x = detail::mix64(x);
      word = x;
    }
    // All-zero state is a fixed point of xoshiro; mix64 chains from any seed
    // cannot produce four zero words, but guard anyway.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
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

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

enum class StreamKind : std::uint64_t {
  DesignInit = 1,
  DesignMutation = 2,
  Controller = 3,
  Analysis = 4,
};

// Streams for distinct (kind, key) pairs are independent; the same triple
// always yields the same stream.
inline RngStream derive_stream(std::uint64_t master_seed, StreamKind kind,
                               std::uint64_t key = 0) {
  std::uint64_t h = detail::mix64(master_seed);
  h ^= detail::mix64(static_cast<std::uint64_t>(kind) * 0xa24baed4963ee407ull);
  h ^= detail::mix64(key * 0x9fb21c651e98df25ull + 0x5851f42d4c957f2dull);
  return RngStream(h);
}

}  // namespace morphx
