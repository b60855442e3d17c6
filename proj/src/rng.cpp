#include "roipose/rng.hpp"

#include <cmath>

namespace roipose {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) {
    word = splitmix64(s);
  }
}

std::uint64_t Rng::next_u64() {
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

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
  return a + uniform01() * (b - a);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_gaussian_;
  }
  double u, v, s;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double mult = std::sqrt(-2.0 * std::log(s) / s);
  spare_gaussian_ = v * mult;
  has_spare_ = true;
  return u * mult;
}

Quaternion Rng::unit_quaternion() {
  while (true) {
    const Quaternion q{gaussian(), gaussian(), gaussian(), gaussian()};
    if (q.norm() > 1e-8) {
      return q.normalized();
    }
  }
}

Vec3 Rng::unit_vector() {
  while (true) {
    const Vec3 v{gaussian(), gaussian(), gaussian()};
    if (v.norm() > 1e-8) {
      return v / v.norm();
    }
  }
}

}  // namespace roipose
