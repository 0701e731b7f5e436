#include "pcm/calculus.hpp"

#include <array>
#include <cmath>
#include <string>

#include "pcm/par.hpp"

namespace pcm {

BondVectorField d_forward(const LatticeGeometry& geom, const Vector3Field& f) {
  BondVectorField g;
  g.geom = &geom;
  g.v.resize(geom.num_bonds());
  for (int b = 0; b < geom.num_bonds(); ++b)
    g.v[b] = f[geom.bonds()[b].minus] - f[geom.bonds()[b].plus];
  return g;
}

Vector3Field d_adjoint(const BondVectorField& g) {
  const auto& geom = *g.geom;
  Vector3Field f(geom.num_sites(), Eigen::Vector3d::Zero());
  for (int s = 0; s < geom.num_sites(); ++s)
    for (auto [b, sigma] : geom.bonds_of_site(s)) f[s] += double(sigma) * g.v[b];
  return f;
}

Vector3Field q_average(const LatticeGeometry& geom, const Vector3Field& f) {
  Vector3Field out(geom.num_coarse(), Eigen::Vector3d::Zero());
  double w = 1.0 / (geom.L() * geom.L());
  for (int y = 0; y < geom.num_coarse(); ++y) {
    for (int s : geom.box_sites(y)) out[y] += f[s];
    out[y] *= w;
  }
  return out;
}

Vector3Field q_adjoint(const LatticeGeometry& geom, const Vector3Field& g) {
  Vector3Field out(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s) out[s] = g[geom.box_of(s)];
  return out;
}

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& a) {
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return k;
}

}  // namespace

RotationField RotationField::build(const VectorConfig& a) {
  const auto& geom = *a.geom;
  RotationField f;
  f.geom = a.geom;
  int ns = geom.num_sites();
  f.r.resize(ns);
  f.r_star.resize(ns);
  f.invertible = true;
  std::vector<Eigen::Matrix3d> inv(ns);
  for (int s = 0; s < ns; ++s) {
    const Eigen::Vector3d& av = a.a[s];
    double a0 = std::sqrt(std::max(0.0, 1.0 - av.squaredNorm()));
    Eigen::Matrix3d k = cross_matrix(av);
    f.r[s] = a0 * Eigen::Matrix3d::Identity() + k;
    f.r_star[s] = a0 * Eigen::Matrix3d::Identity() - k;
    if (a0 < 1e-14) {
      f.invertible = false;
      continue;
    }
    // R^-1 = (1/A0) P_n + A0 (1 - P_n) - A x .   (P_n projects onto A)
    double r2 = av.squaredNorm();
    Eigen::Matrix3d pn = r2 > 0 ? Eigen::Matrix3d((av * av.transpose()) / r2)
                                : Eigen::Matrix3d::Zero();
    inv[s] = pn / a0 + a0 * (Eigen::Matrix3d::Identity() - pn) - k;
  }
  if (f.invertible) f.r_inv = std::move(inv);
  return f;
}

Vector3Field r_transform(const VectorConfig& a, RMode mode, const Vector3Field& v) {
  const auto& geom = *a.geom;
  RotationField f = RotationField::build(a);
  if (mode == RMode::Inverse && !f.invertible) {
    for (int s = 0; s < geom.num_sites(); ++s)
      if (std::sqrt(std::max(0.0, 1.0 - a.a[s].squaredNorm())) < 1e-14)
        throw SingularTransform("R_A not invertible: A0 = 0 at site " + std::to_string(s));
  }
  Vector3Field out(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s) {
    const Eigen::Matrix3d& mat = (mode == RMode::Apply)     ? f.r[s]
                                 : (mode == RMode::Adjoint) ? f.r_star[s]
                                                            : f.r_inv[s];
    out[s] = mat * v[s];
  }
  return out;
}

namespace {

BondW bond_w_impl(const VectorConfig& a, const CoarseConfig& vc, bool parallel) {
  const auto& geom = *a.geom;
  BondW out;
  out.w.geom = a.geom;
  out.w.v.resize(geom.num_bonds());
  out.w0.resize(geom.num_bonds());
  out.sw.resize(geom.num_bonds());
  par_for(
      geom.num_bonds(),
      [&](std::int64_t b) {
        const Bond& bond = geom.bonds()[b];
        Su2 dv = su2_mul(vc.v[geom.box_of(bond.minus)], vc.v[geom.box_of(bond.plus)].conj());
        Su2 w = su2_mul(su2_from_vector(a.a[bond.minus]),
                        su2_mul(dv, su2_from_vector(a.a[bond.plus]).conj()));
        out.w.v[b] = w.vec();
        out.w0[b] = w.a0();
        out.sw[b] = w.sign();
      },
      parallel);
  return out;
}

BondVectorField remainder_impl(const VectorConfig& a, const CoarseConfig& vc, bool parallel) {
  const auto& geom = *a.geom;
  BondVectorField r;
  r.geom = a.geom;
  r.v.resize(geom.num_bonds());
  par_for(
      geom.num_bonds(),
      [&](std::int64_t bi) {
        const Bond& bond = geom.bonds()[bi];
        const Eigen::Vector3d& am = a.a[bond.minus];
        const Eigen::Vector3d& ap = a.a[bond.plus];
        double a0m = std::sqrt(std::max(0.0, 1.0 - am.squaredNorm()));
        double a0p = std::sqrt(std::max(0.0, 1.0 - ap.squaredNorm()));
        Su2 dv = su2_mul(vc.v[geom.box_of(bond.minus)], vc.v[geom.box_of(bond.plus)].conj());
        double b0 = dv.q0();  // signed real part of B = dV(y_b)
        Eigen::Vector3d bv = dv.vec();
        r.v[bi] = (1.0 - a0m * b0) * ap - (1.0 - a0p * b0) * am + (a0p * a0m) * bv
                  - a0p * am.cross(bv) + a0m * bv.cross(ap) + b0 * am.cross(ap)
                  + ap * am.dot(bv) + am * bv.dot(ap) - bv * am.dot(ap);
      },
      parallel);
  return r;
}

}  // namespace

BondW bond_w_field(const VectorConfig& a, const CoarseConfig& v) {
  return bond_w_impl(a, v, true);
}
BondW bond_w_field_serial(const VectorConfig& a, const CoarseConfig& v) {
  return bond_w_impl(a, v, false);
}

BondVectorField remainder_field(const VectorConfig& a, const CoarseConfig& v) {
  return remainder_impl(a, v, true);
}
BondVectorField remainder_field_serial(const VectorConfig& a, const CoarseConfig& v) {
  return remainder_impl(a, v, false);
}

Vector3Field TangentVector::to_field() const {
  Vector3Field f(geom->num_sites(), Eigen::Vector3d::Zero());
  f[site_minus] = x_minus;
  f[site_plus] = x_plus;
  return f;
}

std::vector<TangentVector> tangent_basis(const VectorConfig& a, int coarse) {
  const auto& geom = *a.geom;
  RotationField rot = RotationField::build(a);
  SpanningTree tree = geom.spanning_tree(coarse);

  std::vector<TangentVector> basis;
  basis.reserve(3 * tree.bonds.size());
  for (const TreeBond& tb : tree.bonds) {
    const Bond& bond = geom.bonds()[tb.bond];
    for (int s : {bond.minus, bond.plus})
      if (!rot.invertible && std::sqrt(std::max(0.0, 1.0 - a.a[s].squaredNorm())) < 1e-14)
        throw SingularTransform("tangent_basis: A0 = 0 at tree site " + std::to_string(s));
    for (int j = 0; j < 3; ++j) {
      TangentVector x;
      x.geom = a.geom;
      x.bond = tb.bond;
      x.site_minus = bond.minus;
      x.site_plus = bond.plus;
      x.v = Eigen::Vector3d::Unit(j);
      x.x_minus = rot.r_inv[bond.minus] * x.v;
      x.x_plus = -(rot.r_inv[bond.plus] * x.v);
      if (!tb.agrees) {  // tree runs against the bond: endpoint roles exchange
        x.x_minus = -x.x_minus;
        x.x_plus = -x.x_plus;
      }
      basis.push_back(x);
    }
  }
  return basis;
}

double lie_derivative_action(const VectorConfig& a, const CoarseConfig& v,
                             const TangentVector& x, LieMethod method) {
  const auto& geom = *a.geom;
  if (method == LieMethod::Algebraic) {
    BondW bw = bond_w_field(a, v);
    // 2 sum_b dX(b).w(b), with X supported on the two endpoint sites
    double sum = 0.0;
    for (auto [b, sigma] : geom.bonds_of_site(x.site_minus))
      sum += 2.0 * double(sigma) * x.x_minus.dot(bw.w.v[b]);
    for (auto [b, sigma] : geom.bonds_of_site(x.site_plus))
      sum += 2.0 * double(sigma) * x.x_plus.dot(bw.w.v[b]);
    return sum;
  }

  const double h = 1e-5;
  FineConfig u = assemble_fine(a, v);
  const std::array<std::pair<int, Eigen::Vector3d>, 2> support = {
      std::pair<int, Eigen::Vector3d>{x.site_minus, x.x_minus},
      std::pair<int, Eigen::Vector3d>{x.site_plus, x.x_plus}};
  auto flowed = [&](double t) {
    FineConfig ut = u;
    for (const auto& [site, xv] : support) {
      double len = xv.norm();
      if (len == 0.0) continue;
      ut.u[site] = su2_mul(Su2::axis_angle(xv / len, t * len), ut.u[site]);
    }
    return action(ut);
  };
  return (flowed(h) - flowed(-h)) / (2.0 * h);
}

}  // namespace pcm
