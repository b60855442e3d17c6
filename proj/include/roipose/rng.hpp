#pragma once

#include "roipose/geometry.hpp"

#include <array>
#include <cstdint>

namespace roipose {

/// Deterministic 64-bit PRNG: xoshiro256++ with splitmix64 state seeding.
/// The algorithm is fixed by this implementation (see README, "Determinism");
/// platform RNGs are never used, so identical seeds reproduce identical
/// streams everywhere. Gaussian draws use the Marsaglia polar method with
/// the spare value cached, which makes the number of raw draws per call
/// data-dependent but still a pure function of the seed and call order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01();

  /// Uniform in [a, b).
  double uniform(double a, double b);

  /// Standard normal.
  double gaussian();

  /// Uniform over SO(3): four gaussians normalized, canonical sign.
  Quaternion unit_quaternion();

  /// Uniform direction on the unit sphere.
  Vec3 unit_vector();

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_gaussian_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace roipose
