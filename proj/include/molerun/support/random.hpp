#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace molerun {

/// Derives the seed of an independent stream from a master seed and a stream
/// name. Stable across platforms and releases; golden outputs depend on it.
std::uint64_t stream_seed(std::uint64_t master_seed, std::string_view stream);

/// Mixes two words into one seed (splitmix64 finalizer over a xor-combine).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Portable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so the
/// conversions to reals and bounded integers are done here explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  bool coin() { return (engine_() >> 63) != 0; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace molerun
