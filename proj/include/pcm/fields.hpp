#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcm/lattice.hpp"
#include "pcm/su2.hpp"

namespace pcm {

// Configuration on the fine lattice (one group element per site of Omega).
struct FineConfig {
  const LatticeGeometry* geom = nullptr;
  std::vector<Su2> u;

  static FineConfig constant(const LatticeGeometry& g, const Su2& v = Su2::identity()) {
    return {&g, std::vector<Su2>(g.num_sites(), v)};
  }
};

// Configuration on the coarse lattice (the constraint data V).
struct CoarseConfig {
  const LatticeGeometry* geom = nullptr;
  std::vector<Su2> v;

  static CoarseConfig constant(const LatticeGeometry& g, const Su2& u = Su2::identity()) {
    return {&g, std::vector<Su2>(g.num_coarse(), u)};
  }
};

// R^3-valued fluctuation field A on fine sites, |A(x)| <= 1 everywhere.
struct VectorConfig {
  const LatticeGeometry* geom = nullptr;
  std::vector<Eigen::Vector3d> a;

  static VectorConfig zero(const LatticeGeometry& g) {
    return {&g, std::vector<Eigen::Vector3d>(g.num_sites(), Eigen::Vector3d::Zero())};
  }
  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : a) s = std::max(s, v.norm());
    return s;
  }
};

// Sum over bonds of Re Tr(1 - U(b_-)U(b_+)^*); each bond contributes
// 2(1 - (dU(b))_0) in quaternion form. Sequential reduction, bond order fixed.
double action(const FineConfig& u);

struct BlockAverage {
  std::vector<WeightedSum> raw;  // C_0(U)(y) = c * u in polar form
  CoarseConfig avg;              // C(U)(y); identity where c = 0
};

// Arithmetic mean over each box with weights 1/L^2 followed by the polar
// projection back into the group.
BlockAverage block_average(const FineConfig& u);

// sup over bonds of ||U(b_-)U(b_+)^* - 1||; membership in Conf_eps is
// equivalent to this being <= eps.
double small_field_sup(const FineConfig& u);

// Same quantity on the coarse lattice (bonds of Omega_1).
double coarse_small_field_sup(const CoarseConfig& v);

struct SampledConfigs {
  CoarseConfig v;
  VectorConfig a;
};

// Deterministic in the seed. V gets per-site axis-angle draws rescaled until
// its bond sup is <= eps1; A is drawn i.i.d. in the eps-ball, block-mean
// projected (so Q(A) = 0 exactly) and rescaled so that sup |A| <= eps.
SampledConfigs sample_configs(const LatticeGeometry& geom, double eps1, double eps,
                              std::uint64_t seed);

// U(x) = [A(x)] V(y_x) with [.] the s = +1 lift.
FineConfig assemble_fine(const VectorConfig& a, const CoarseConfig& v);

// Inverse of assemble_fine in the s = +1 regime: A(x) = vec(U(x) V(y_x)^*).
VectorConfig extract_fluctuation(const FineConfig& u, const CoarseConfig& v);

// The square-root perturbation constant (1/pi) Int_0^inf sqrt(y)/((y+1)(y+1/2)) dy,
// evaluated by quadrature once and cached. Recorded in run manifests.
double c_half();

}  // namespace pcm
