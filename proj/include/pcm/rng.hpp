#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace pcm {

// Seeded stream with hand-rolled distributions so that outputs are identical
// across standard libraries (std distributions are not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {  // [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in the closed ball of the given radius (rejection from the cube).
  Eigen::Vector3d ball3(double radius) {
    while (true) {
      Eigen::Vector3d v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      if (v.squaredNorm() <= 1.0) return radius * v;
    }
  }

  Eigen::Vector3d unit3() {
    while (true) {
      Eigen::Vector3d v = ball3(1.0);
      double r = v.norm();
      if (r > 1e-3) return v / r;
    }
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pcm
