#pragma once

// Portable deterministic randomness for simulations.
//
// Every independent decision stream (channel draws for one message on one
// link, a node's neighbor choice, workload placement) is a SplitMix64
// generator whose seed is derived from the run seed and a stream label, so a
// trace depends only on the seed and config and not on the platform's
// standard-library distributions.

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace handoff {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a; stable across platforms unlike std::hash.
inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives a stream seed from the run seed and a sequence of labels.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = mix64(seed ^ 0x5eed5eed5eed5eedULL);
  for (auto l : labels) h = mix64(h ^ mix64(l + 0x9e3779b97f4a7c15ULL));
  return h;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  /// Uniform in [0, n); n must be positive. Rejection sampling keeps it exact.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = hi - lo;
    if (span == ~std::uint64_t{0}) return next();
    return lo + below(span + 1);
  }

 private:
  std::uint64_t state_;
};

// Stream labels.
inline constexpr std::uint64_t kStreamChannel = 1;
inline constexpr std::uint64_t kStreamWorkload = 2;
inline constexpr std::uint64_t kStreamGossip = 3;
inline constexpr std::uint64_t kStreamFetch = 4;

}  // namespace handoff
