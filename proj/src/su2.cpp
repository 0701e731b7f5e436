#include "pcm/su2.hpp"

#include <cmath>
#include <string>

namespace pcm {

namespace {
constexpr double kNormDriftLimit = 1e-9;
}  // namespace

Su2::Su2(double q0, double q1, double q2, double q3) : q_{q0, q1, q2, q3} {
  double n = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
  if (std::abs(n - 1.0) > kNormDriftLimit)
    throw InvalidParameter("quaternion norm deviates from 1 by " + std::to_string(n - 1.0));
  for (double& c : q_) c /= n;
}

Su2 Su2::axis_angle(const Eigen::Vector3d& axis, double angle) {
  Eigen::Vector3d n = axis;
  double len = n.norm();
  if (len == 0.0) throw InvalidParameter("axis must be nonzero");
  n /= len;
  double c = std::cos(angle), s = std::sin(angle);
  return raw(c, s * n.x(), s * n.y(), s * n.z());
}

Su2 su2_from_vector(const Eigen::Vector3d& a, int s) {
  double r2 = a.squaredNorm();
  if (r2 > 1.0 + 1e-12)
    throw InvalidParameter("|A| must be <= 1 (got |A|=" + std::to_string(std::sqrt(r2)) + ")");
  double q0 = (s >= 0 ? 1.0 : -1.0) * std::sqrt(std::max(0.0, 1.0 - r2));
  double n = std::sqrt(q0 * q0 + r2);
  return Su2::raw(q0 / n, a.x() / n, a.y() / n, a.z() / n);
}

Su2 su2_mul(const Su2& u, const Su2& v) {
  Eigen::Vector3d uv = u.vec(), vv = v.vec();
  double q0 = u.q0() * v.q0() - uv.dot(vv);
  Eigen::Vector3d w = u.q0() * vv + v.q0() * uv - uv.cross(vv);
  // renormalize after every multiplication to keep drift at rounding level
  double n = std::sqrt(q0 * q0 + w.squaredNorm());
  return Su2::raw(q0 / n, w.x() / n, w.y() / n, w.z() / n);
}

double dist_to_identity(const Su2& u) {
  double q0 = u.q0();
  if (q0 >= 0.0) {
    // 2(1-q0) = 2|A|^2/(1+q0), exact and cancellation-free
    return std::sqrt(2.0 * u.vec().squaredNorm() / (1.0 + q0));
  }
  return std::sqrt(2.0 * (1.0 - q0));
}

WeightedSum su2_weighted_sum(std::span<const std::pair<double, Su2>> terms) {
  WeightedSum acc;  // c = 0, u = identity
  for (const auto& [c, u] : terms) {
    if (c < 0.0) throw InvalidParameter("weights must be nonnegative");
    // two-term rule: c3^2 = c1^2 + c2^2 + 2 c1 c2 <q1, q2>
    double dot = acc.u.q0() * u.q0() + acc.u.vec().dot(u.vec());
    double c3sq = acc.c * acc.c + c * c + 2.0 * acc.c * c * dot;
    double c3 = std::sqrt(std::max(0.0, c3sq));
    if (c3 <= 1e-15 * (acc.c + c)) {
      acc = WeightedSum{};  // c3 = 0 yields the identity by convention
      continue;
    }
    double q[4];
    for (int i = 0; i < 4; ++i) q[i] = (acc.c * acc.u[i] + c * u[i]) / c3;
    double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    acc.c = c3 * n;
    acc.u = Su2::raw(q[0] / n, q[1] / n, q[2] / n, q[3] / n);
  }
  return acc;
}

WeightedSum su2_weighted_sum(const std::vector<std::pair<double, Su2>>& terms) {
  return su2_weighted_sum(std::span<const std::pair<double, Su2>>(terms));
}

}  // namespace pcm
