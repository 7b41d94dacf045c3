// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "granum/tensor.hpp"

namespace granum {

/// Seeded deterministic random source.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The conversions to doubles are done here rather than through
/// <random> distributions, whose algorithms differ between standard
/// libraries. Single-owner: give each parallel task its own instance.
class RandomSource {
public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_unit();
  /// Uniform in [lo, hi); throws RangeError when lo >= hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal draw (Box-Muller, one value per call).
  double normal();

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Tensor of i.i.d. draws in [lo, hi).
Tensor uniform(RandomSource &rs, Shape shape, double lo, double hi);

/// Derives an independent child seed (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace granum
