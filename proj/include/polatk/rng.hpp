#pragma once

// Seeded randomness. Sequential draws (scene layout, weight init, random
// perturbations) come from a 64-bit Mersenne twister. Per-pixel noise uses a
// counter-based hash so every sample depends only on (seed, stream, index)
// and can be generated in any order.

#include <cstdint>
#include <random>

namespace polatk {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal sample addressed by (seed, stream, index).
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Derive an independent child seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x9e3779b97f4a7c15ull));
}

}  // namespace polatk
