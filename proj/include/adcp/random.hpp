#pragma once

#include <cstdint>
#include <random>

namespace adcp {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a parent seed and an index.
///
/// child = splitmix64(parent + 0x9E3779B97F4A7C15 * (index + 1)). Used for
/// per-cell, per-image, per-particle and per-iteration streams so results do
/// not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Deterministic random source. The variate transforms are implemented here
/// rather than through <random> distributions, whose output is
/// implementation-defined, so sequences are identical across standard
/// libraries.
class SeededRandom {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double unit();

  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adcp
