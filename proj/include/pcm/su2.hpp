#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "pcm/errors.hpp"

namespace pcm {

// Group element stored as a unit quaternion q = (q0, q1, q2, q3) representing
// q0*1 + i(q1*s1 + q2*s2 + q3*s3) with s_j the Pauli matrices. The derived
// (s, A) view is s = sgn(q0) (s = +1 at q0 = 0), A = (q1,q2,q3), A0 = |q0|.
class Su2 {
 public:
  Su2() : q_{1.0, 0.0, 0.0, 0.0} {}  // identity

  // Components must already be unit to 1e-9; renormalized on construction.
  Su2(double q0, double q1, double q2, double q3);

  static Su2 identity() { return Su2(); }
  static Su2 minus_identity() { return Su2(-1.0, 0.0, 0.0, 0.0); }

  // Test helper: axis-angle element exp(i * angle * (axis . sigma)).
  static Su2 axis_angle(const Eigen::Vector3d& axis, double angle);

  double q0() const { return q_[0]; }
  double operator[](int i) const { return q_[i]; }

  Eigen::Vector3d vec() const { return {q_[1], q_[2], q_[3]}; }
  int sign() const { return q_[0] < 0.0 ? -1 : +1; }
  double a0() const { return std::abs(q_[0]); }

  Su2 conj() const { return raw(q_[0], -q_[1], -q_[2], -q_[3]); }

  // Internal: bypasses the norm check. Callers must pass unit components.
  static Su2 raw(double a, double b, double c, double d) {
    Su2 u;
    u.q_ = {a, b, c, d};
    return u;
  }

 private:
  std::array<double, 4> q_;
};

// (q0, vec) from the s = +1 chart: q0 = s*sqrt(1-|A|^2). |A| > 1 is rejected.
Su2 su2_from_vector(const Eigen::Vector3d& a, int s = +1);

// Quaternion product: (UV)^0 = U^0 V^0 - U.V, (UV)^ = U^0 V + V^0 U - U x V.
Su2 su2_mul(const Su2& u, const Su2& v);

// Operator norm ||U - 1|| of the 2x2 realization; closed form sqrt(2(1-q0)),
// evaluated cancellation-free near the identity.
double dist_to_identity(const Su2& u);

struct WeightedSum {
  double c = 0.0;  // c3 >= 0
  Su2 u;           // u3; identity when c3 = 0
};

// Unique (c3, U3) with sum_i c_i U_i = c3 U3 as 2x2 matrices, computed by
// folding the two-term rule c3^2 = c1^2 + c2^2 + 2 c1 c2 (q1 . q2).
WeightedSum su2_weighted_sum(std::span<const std::pair<double, Su2>> terms);
WeightedSum su2_weighted_sum(const std::vector<std::pair<double, Su2>>& terms);

}  // namespace pcm
