#include "pcm/fields.hpp"

#include <cmath>
#include <string>

#include "pcm/rng.hpp"

namespace pcm {

double action(const FineConfig& u) {
  const auto& g = *u.geom;
  double s = 0.0;
  for (const Bond& b : g.bonds()) {
    Su2 du = su2_mul(u.u[b.minus], u.u[b.plus].conj());
    // 2(1 - q0), evaluated as 2|w|^2/(1+q0) near the identity so that bond
    // contributions keep full relative precision (they are ~eps^2 small)
    double q0 = du.q0();
    s += q0 >= 0.0 ? 2.0 * du.vec().squaredNorm() / (1.0 + q0) : 2.0 * (1.0 - q0);
  }
  return s;
}

BlockAverage block_average(const FineConfig& u) {
  const auto& g = *u.geom;
  BlockAverage out;
  out.raw.resize(g.num_coarse());
  out.avg.geom = u.geom;
  out.avg.v.resize(g.num_coarse());
  double w = 1.0 / (g.L() * g.L());
  for (int y = 0; y < g.num_coarse(); ++y) {
    std::vector<std::pair<double, Su2>> terms;
    terms.reserve(g.box_sites(y).size());
    for (int s : g.box_sites(y)) terms.push_back({w, u.u[s]});
    out.raw[y] = su2_weighted_sum(terms);
    out.avg.v[y] = out.raw[y].c > 0.0 ? out.raw[y].u : Su2::identity();
  }
  return out;
}

double small_field_sup(const FineConfig& u) {
  const auto& g = *u.geom;
  double s = 0.0;
  for (const Bond& b : g.bonds())
    s = std::max(s, dist_to_identity(su2_mul(u.u[b.minus], u.u[b.plus].conj())));
  return s;
}

double coarse_small_field_sup(const CoarseConfig& v) {
  const auto& g = *v.geom;
  double s = 0.0;
  for (const Bond& b : g.coarse_bonds())
    s = std::max(s, dist_to_identity(su2_mul(v.v[b.minus], v.v[b.plus].conj())));
  return s;
}

SampledConfigs sample_configs(const LatticeGeometry& geom, double eps1, double eps,
                              std::uint64_t seed) {
  if (eps1 < 0.0 || eps <= 0.0 || eps > 1.0 || eps1 > 1.0)
    throw InvalidParameter("sample_configs requires 0 < eps <= 1 and 0 <= eps1 <= 1");
  Rng rng(seed);
  SampledConfigs out;

  out.v = CoarseConfig::constant(geom);
  if (eps1 > 0.0) {
    std::vector<Eigen::Vector3d> axes(geom.num_coarse());
    std::vector<double> angles(geom.num_coarse());
    for (int y = 0; y < geom.num_coarse(); ++y) {
      axes[y] = rng.unit3();
      angles[y] = rng.uniform(0.0, 0.25 * M_PI);
    }
    for (int halvings = 0; halvings < 200; ++halvings) {
      for (int y = 0; y < geom.num_coarse(); ++y)
        out.v.v[y] = Su2::axis_angle(axes[y], angles[y]);
      if (coarse_small_field_sup(out.v) <= eps1) break;
      for (double& a : angles) a *= 0.5;
    }
  }

  out.a.geom = &geom;
  out.a.a.resize(geom.num_sites());
  for (auto& v : out.a.a) v = rng.ball3(eps);
  // subtract block means so that Q(A) = 0
  double w = 1.0 / (geom.L() * geom.L());
  for (int y = 0; y < geom.num_coarse(); ++y) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int s : geom.box_sites(y)) mean += out.a.a[s];
    mean *= w;
    for (int s : geom.box_sites(y)) out.a.a[s] -= mean;
  }
  double sup = out.a.sup_norm();
  if (sup > eps)
    for (auto& v : out.a.a) v *= eps / sup;
  return out;
}

FineConfig assemble_fine(const VectorConfig& a, const CoarseConfig& v) {
  const auto& g = *a.geom;
  FineConfig u;
  u.geom = a.geom;
  u.u.resize(g.num_sites());
  for (int s = 0; s < g.num_sites(); ++s) {
    if (a.a[s].squaredNorm() > 1.0 + 1e-12)
      throw InvalidParameter("assemble_fine: |A| > 1 at site " + std::to_string(s));
    u.u[s] = su2_mul(su2_from_vector(a.a[s]), v.v[g.box_of(s)]);
  }
  return u;
}

VectorConfig extract_fluctuation(const FineConfig& u, const CoarseConfig& v) {
  const auto& g = *u.geom;
  VectorConfig a;
  a.geom = u.geom;
  a.a.resize(g.num_sites());
  for (int s = 0; s < g.num_sites(); ++s)
    a.a[s] = su2_mul(u.u[s], v.v[g.box_of(s)].conj()).vec();
  return a;
}

double c_half() {
  // substitute y = (1-s^2)/s^2 ... reduced to 4 cos^2(phi)/(2 - sin^2(phi)) on
  // [0, pi/2]; composite Simpson at this smoothness is exact to rounding.
  static const double value = [] {
    const int n = 1 << 14;  // even
    const double h = (M_PI / 2) / n;
    auto f = [](double phi) {
      double c = std::cos(phi), s = std::sin(phi);
      return 4.0 * c * c / (2.0 - s * s);
    };
    double sum = f(0.0) + f(M_PI / 2);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return (h / 3.0) * sum / M_PI;
  }();
  return value;
}

}  // namespace pcm
