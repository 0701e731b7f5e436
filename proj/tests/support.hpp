#pragma once

// Test-only helpers. The 2x2 complex-matrix realization below is the
// independent oracle for the quaternion arithmetic: group elements become
// explicit matrices, norms come from eigenvalues of M*M, and nothing here
// touches the quaternion code paths it is used to check.

#include <Eigen/Dense>
#include <complex>

#include "pcm/rng.hpp"
#include "pcm/su2.hpp"

namespace pcm::test {

using Mat2 = Eigen::Matrix2cd;

inline Mat2 to_matrix(const Su2& u) {
  const std::complex<double> i(0.0, 1.0);
  Mat2 m;
  m(0, 0) = u[0] + i * u[3];
  m(0, 1) = i * u[1] + u[2];
  m(1, 0) = i * u[1] - u[2];
  m(1, 1) = u[0] - i * u[3];
  return m;
}

inline Mat2 pauli(int j) {
  const std::complex<double> i(0.0, 1.0);
  Mat2 m;
  switch (j) {
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// operator norm of a 2x2 complex matrix from the eigenvalues of M*M,
// written in the cancellation-free Hermitian form
inline double op_norm(const Mat2& m) {
  Mat2 h = m.adjoint() * m;
  double a = h(0, 0).real(), d = h(1, 1).real();
  double off = std::abs(h(0, 1));
  double lam = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + off * off);
  return std::sqrt(std::max(0.0, lam));
}

inline Su2 random_su2(Rng& rng) {
  while (true) {
    double q[4];
    double n2 = 0.0;
    for (int i = 0; i < 4; ++i) {
      q[i] = rng.uniform(-1.0, 1.0);
      n2 += q[i] * q[i];
    }
    if (n2 > 1e-6 && n2 <= 1.0) {
      double n = std::sqrt(n2);
      return Su2(q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    }
  }
}

inline Su2 random_su2_near_identity(Rng& rng, double dist_bound) {
  // dist 2|sin(a/2)| <= bound
  double a = 2.0 * std::asin(std::min(1.0, dist_bound / 2.0)) * rng.uniform01();
  return Su2::axis_angle(rng.unit3(), a);
}

}  // namespace pcm::test
