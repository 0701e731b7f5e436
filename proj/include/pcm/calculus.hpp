#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcm/fields.hpp"
#include "pcm/lattice.hpp"

namespace pcm {

using Vector3Field = std::vector<Eigen::Vector3d>;  // indexed by site (fine or coarse)

// R^3-valued function on the oriented bonds of Omega'.
struct BondVectorField {
  const LatticeGeometry* geom = nullptr;
  std::vector<Eigen::Vector3d> v;  // indexed by bond id
};

// (df)(b) = f(b_-) - f(b_+).
BondVectorField d_forward(const LatticeGeometry& geom, const Vector3Field& f);

// Adjoint of d in the unweighted bond product: (d*g)(x) = sum_{b: b_-=x} g(b)
// - sum_{b: b_+=x} g(b). With this sign, -d*d is the Neumann Laplacian.
Vector3Field d_adjoint(const BondVectorField& g);

// (Qf)(y) = L^-2 sum_{x in B_1(y)} f(x).
Vector3Field q_average(const LatticeGeometry& geom, const Vector3Field& f);

// (Q*g)(x) = g(y_x); adjoint of Q when the coarse product carries weight L^2.
Vector3Field q_adjoint(const LatticeGeometry& geom, const Vector3Field& g);

// Site-wise transformations R(x)v = A0(x) v + A(x) x v in the s = +1 chart,
// with adjoint (cross-product sign flipped) and inverse where A0 != 0.
struct RotationField {
  const LatticeGeometry* geom = nullptr;
  std::vector<Eigen::Matrix3d> r;
  std::vector<Eigen::Matrix3d> r_star;
  std::vector<Eigen::Matrix3d> r_inv;  // empty when some A0 = 0
  bool invertible = false;

  static RotationField build(const VectorConfig& a);
};

enum class RMode { Apply, Adjoint, Inverse };

Vector3Field r_transform(const VectorConfig& a, RMode mode, const Vector3Field& v);

// Per-bond decomposition of W(b) = U'(b_-) dV(y_b) U'(b_+)^* into scalar and
// vector parts: W = sW * w0 + i w.sigma.
struct BondW {
  BondVectorField w;
  std::vector<double> w0;
  std::vector<int> sw;
};

BondW bond_w_field(const VectorConfig& a, const CoarseConfig& v);
BondW bond_w_field_serial(const VectorConfig& a, const CoarseConfig& v);

// The remainder r(b) of w = dA + r, from the explicit nine-term formula in the
// s = +1 chart. Exact: w - dA - r vanishes to rounding for any admissible A, V.
BondVectorField remainder_field(const VectorConfig& a, const CoarseConfig& v);
BondVectorField remainder_field_serial(const VectorConfig& a, const CoarseConfig& v);

// Tangent vector to the constraint manifold, supported on the endpoints of
// one spanning-tree bond: X(c_-) = R^-1(c_-) v, X(c_+) = -R^-1(c_+) v, the two
// values swapped when the tree traverses the bond against its orientation.
struct TangentVector {
  const LatticeGeometry* geom = nullptr;
  int bond = -1;
  int site_minus = -1, site_plus = -1;
  Eigen::Vector3d x_minus = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_plus = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  // the free vector

  Vector3Field to_field() const;
};

// 3(L^2-1) basis vectors for the box labeled y.
std::vector<TangentVector> tangent_basis(const VectorConfig& a, int coarse);

enum class LieMethod { Algebraic, Flow };

// Directional derivative of the action along exp(itX.sigma)U'. The algebraic
// route is 2 sum_b dX(b).w(b); the flow route is a central difference with
// step 1e-5 of t -> action of the flowed configuration.
double lie_derivative_action(const VectorConfig& a, const CoarseConfig& v,
                             const TangentVector& x, LieMethod method);

}  // namespace pcm
