// SPDX-License-Identifier: Apache-2.0
#include "granum/random.hpp"

#include <cmath>
#include <numbers>

#include "granum/error.hpp"

namespace granum {

double RandomSource::next_unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform(double lo, double hi) {
  if (!(lo < hi))
    throw RangeError("uniform: require lo < hi");
  return lo + (hi - lo) * next_unit();
}

std::uint64_t RandomSource::below(std::uint64_t bound) {
  if (bound == 0)
    throw RangeError("below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double RandomSource::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor uniform(RandomSource &rs, Shape shape, double lo, double hi) {
  if (!(lo < hi))
    throw RangeError("uniform: require lo < hi");
  Tensor t(std::move(shape));
  for (auto &v : t.data())
    v = rs.uniform(lo, hi);
  return t;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace granum
