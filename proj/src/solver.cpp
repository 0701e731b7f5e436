#include "pcm/solver.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

#include "pcm/calculus.hpp"
#include "pcm/rng.hpp"

namespace pcm {

GreenPack make_green_pack(const LatticeGeometry& geom) {
  GreenPack pack;
  pack.geom = &geom;
  pack.g = assemble_green(geom);
  CoarseGreen cg = coarse_green(geom, pack.g);
  pack.qgq = std::move(cg.qgq);
  pack.qgq_inv = std::move(cg.qgq_inv);
  pack.coarse_smallest_eigenvalue = cg.smallest_eigenvalue;

  int nc = geom.num_coarse();
  double w = 1.0 / (geom.L() * geom.L());
  pack.qg.resize(nc, geom.num_sites());
  for (int y = 0; y < nc; ++y) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(geom.num_sites());
    for (int s : geom.box_sites(y)) row += pack.g.k.row(s);
    pack.qg.row(y) = w * row;
  }
  return pack;
}

namespace {

// componentwise application of a scalar fine kernel to a vector field
Vector3Field apply_scalar_kernel(const Eigen::MatrixXd& k, const Vector3Field& f) {
  int n = int(k.rows());
  Eigen::MatrixXd stacked(n, 3);
  for (int i = 0; i < n; ++i) stacked.row(i) = f[i].transpose();
  Eigen::MatrixXd out = k * stacked;
  Vector3Field g(n);
  for (int i = 0; i < n; ++i) g[i] = out.row(i).transpose();
  return g;
}

double sup_field(const Vector3Field& f) {
  double s = 0.0;
  for (const auto& v : f) s = std::max(s, v.norm());
  return s;
}

}  // namespace

VectorConfig t_map(const VectorConfig& a, const CoarseConfig& v, const GreenPack& pack) {
  const LatticeGeometry& geom = *pack.geom;
  if (a.sup_norm() >= 1.0) throw InvalidParameter("t_map requires sup|A| < 1");

  BondVectorField r = remainder_field(a, v);
  Vector3Field dstar_r = d_adjoint(r);
  Vector3Field u = apply_scalar_kernel(pack.g.k, dstar_r);  // G d* r

  // z = D_A^-1 (Q u)
  Eigen::MatrixXd d = assemble_d_matrix(geom, pack.qg, a, false);
  Vector3Field qu = q_average(geom, u);
  int nc = geom.num_coarse();
  Eigen::VectorXd qu_vec(3 * nc);
  for (int y = 0; y < nc; ++y) qu_vec.segment<3>(3 * y) = qu[y];
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(d);
  Eigen::VectorXd z_vec = lu.solve(qu_vec);
  Vector3Field z(nc);
  for (int y = 0; y < nc; ++y) z[y] = z_vec.segment<3>(3 * y);

  // T = G R*_A Q* z - u
  Vector3Field qz = q_adjoint(geom, z);
  Vector3Field rqz = r_transform(a, RMode::Adjoint, qz);
  Vector3Field grqz = apply_scalar_kernel(pack.g.k, rqz);

  VectorConfig out;
  out.geom = a.geom;
  out.a.resize(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s) out.a[s] = grqz[s] - u[s];
  return out;
}

namespace {

IterateDiagnostics diagnose(const VectorConfig& a, const CoarseConfig& v, double eps,
                            double residual) {
  const LatticeGeometry& geom = *a.geom;
  IterateDiagnostics d;
  d.residual = residual;
  d.sup_a = a.sup_norm();
  d.sup_qa = sup_field(q_average(geom, a.a));
  d.small_field = small_field_sup(assemble_fine(a, v));
  double bound = 4.0 * c_half() * geom.L() * eps;
  d.in_x_eps_tight = d.sup_a <= bound && d.small_field <= eps;
  d.in_x_eps = d.sup_a <= bound * geom.L() && d.small_field <= eps;
  return d;
}

}  // namespace

SolveResult solve_critical(const CoarseConfig& v, const SolverConfig& cfg,
                           const GreenPack& pack, const std::optional<VectorConfig>& start) {
  const LatticeGeometry& geom = *pack.geom;
  double eps1 = cfg.effective_eps1();
  double vsup = coarse_small_field_sup(v);
  if (vsup > eps1 + 1e-12)
    throw InvalidParameter("V violates the coarse small-field bound: sup " +
                           std::to_string(vsup) + " > eps1 " + std::to_string(eps1));

  SolveResult res;
  res.report.eps1_warning = cfg.eps1_overridden();
  res.a = start.value_or(VectorConfig::zero(geom));

  double prev_residual = -1.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    VectorConfig next = t_map(res.a, v, pack);
    double residual = 0.0;
    for (int s = 0; s < geom.num_sites(); ++s)
      residual = std::max(residual, (next.a[s] - res.a.a[s]).norm());
    res.a = std::move(next);
    res.report.history.push_back(diagnose(res.a, v, cfg.eps, residual));
    if (prev_residual > 0.0 && residual > 0.0)
      res.report.contraction_factors.push_back(residual / prev_residual);
    prev_residual = residual;
    res.report.iterations = it + 1;
    if (residual <= cfg.tol_residual) {
      res.report.converged = true;
      break;
    }
  }

  // residual of the returned point under one more application of T
  VectorConfig once_more = t_map(res.a, v, pack);
  double fr = 0.0;
  for (int s = 0; s < geom.num_sites(); ++s)
    fr = std::max(fr, (once_more.a[s] - res.a.a[s]).norm());
  res.report.final_residual = fr;
  res.report.converged = res.report.converged && fr <= cfg.tol_residual;
  return res;
}

VerificationReport verify_critical(const VectorConfig& a, const CoarseConfig& v,
                                   const SolverConfig& cfg) {
  const LatticeGeometry& geom = *a.geom;
  VerificationReport rep;
  rep.tol_constraint = cfg.tol_constraint;
  rep.tol_conservation = cfg.tol_conservation;
  rep.tol_lie = cfg.tol_lie;
  rep.eps = cfg.eps;

  rep.sup_qa = sup_field(q_average(geom, a.a));

  BondW bw = bond_w_field(a, v);
  Vector3Field dstar_w = d_adjoint(bw.w);
  RotationField rot = RotationField::build(a);
  if (!rot.invertible)
    throw SingularTransform("verify_critical: R_A singular (some A0 = 0)");

  // conservation field C(x) = R^-1(x)* d* w(x); spread per box
  Vector3Field cons(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s)
    cons[s] = rot.r_inv[s].transpose() * dstar_w[s];
  double spread = 0.0;
  for (int y = 0; y < geom.num_coarse(); ++y) {
    const auto& sites = geom.box_sites(y);
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j)
        spread = std::max(spread, (cons[sites[i]] - cons[sites[j]]).norm());
  }
  rep.conservation_spread = spread;

  // tangential Lie derivatives over the whole basis, via 2 sum X . d*w
  double max_lie = 0.0;
  for (int y = 0; y < geom.num_coarse(); ++y) {
    for (const TangentVector& x : tangent_basis(a, y)) {
      double val = 2.0 * (x.x_minus.dot(dstar_w[x.site_minus]) +
                          x.x_plus.dot(dstar_w[x.site_plus]));
      max_lie = std::max(max_lie, std::abs(val));
    }
  }
  rep.max_lie = max_lie;

  rep.small_field = small_field_sup(assemble_fine(a, v));

  rep.pass_constraint = rep.sup_qa <= cfg.tol_constraint;
  rep.pass_conservation = rep.conservation_spread <= cfg.tol_conservation;
  rep.pass_lie = rep.max_lie <= cfg.tol_lie;
  rep.pass_small_field = rep.small_field <= cfg.eps;
  return rep;
}

namespace {

// draw an element of X_eps: block-mean-zero, rescaled until the assembled
// configuration meets the bond bound
VectorConfig draw_in_x_eps(const LatticeGeometry& geom, const CoarseConfig& v, double eps,
                           Rng& rng) {
  VectorConfig a;
  a.geom = &geom;
  a.a.resize(geom.num_sites());
  for (auto& vec : a.a) vec = rng.ball3(eps / 4.0);
  double w = 1.0 / (geom.L() * geom.L());
  for (int y = 0; y < geom.num_coarse(); ++y) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int s : geom.box_sites(y)) mean += a.a[s];
    mean *= w;
    for (int s : geom.box_sites(y)) a.a[s] -= mean;
  }
  for (int tries = 0; tries < 60; ++tries) {
    if (small_field_sup(assemble_fine(a, v)) <= eps) return a;
    for (auto& vec : a.a) vec *= 0.5;
  }
  return a;
}

}  // namespace

ContractionEstimate estimate_contraction(const CoarseConfig& v, const SolverConfig& cfg,
                                         const GreenPack& pack, std::uint64_t seed) {
  const LatticeGeometry& geom = *pack.geom;
  Rng rng(seed);
  ContractionEstimate out;
  for (int i = 0; i < cfg.contraction_samples; ++i) {
    VectorConfig a1 = draw_in_x_eps(geom, v, cfg.eps, rng);
    VectorConfig a2 = draw_in_x_eps(geom, v, cfg.eps, rng);
    double dist = 0.0;
    for (int s = 0; s < geom.num_sites(); ++s)
      dist = std::max(dist, (a1.a[s] - a2.a[s]).norm());
    if (dist < 1e-14) continue;
    VectorConfig t1 = t_map(a1, v, pack);
    VectorConfig t2 = t_map(a2, v, pack);
    double tdist = 0.0;
    for (int s = 0; s < geom.num_sites(); ++s)
      tdist = std::max(tdist, (t1.a[s] - t2.a[s]).norm());
    out.quotients.push_back(tdist / dist);
    out.q = std::max(out.q, tdist / dist);
  }
  return out;
}

}  // namespace pcm
