#include "pcm/green.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "pcm/par.hpp"

namespace pcm {

namespace {
constexpr int kGreenSideCap = 27;  // dense kernels are desk scale only

void check_green_size(const LatticeGeometry& geom) {
  if (geom.n() > kGreenSideCap)
    throw InvalidParameter("dense kernels are limited to n <= " +
                           std::to_string(kGreenSideCap) + " sites per side (got n=" +
                           std::to_string(geom.n()) + ")");
}
}  // namespace

Eigen::MatrixXd green_operator_matrix(const LatticeGeometry& geom) {
  int ns = geom.num_sites();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ns, ns);
  for (const Bond& b : geom.bonds()) {
    m(b.minus, b.minus) += 1.0;
    m(b.plus, b.plus) += 1.0;
    m(b.minus, b.plus) -= 1.0;
    m(b.plus, b.minus) -= 1.0;
  }
  double w = 1.0 / (geom.L() * geom.L());
  for (int y = 0; y < geom.num_coarse(); ++y)
    for (int s : geom.box_sites(y))
      for (int t : geom.box_sites(y)) m(s, t) += w;
  return m;
}

namespace {

OperatorKernel assemble_green_impl(const LatticeGeometry& geom, bool parallel) {
  check_green_size(geom);
  int ns = geom.num_sites();
  Eigen::MatrixXd m = green_operator_matrix(geom);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularOperator("factorization of -Delta + Q*Q failed");

  OperatorKernel g;
  g.domain = g.codomain = Domain::Fine;
  g.block = 1;
  g.geom = &geom;
  g.symmetric = true;
  g.k.resize(ns, ns);
  par_for(
      ns,
      [&](std::int64_t j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(ns);
        e(j) = 1.0;
        g.k.col(j) = llt.solve(e);
      },
      parallel);
  return g;
}

}  // namespace

OperatorKernel assemble_green(const LatticeGeometry& geom) {
  return assemble_green_impl(geom, true);
}
OperatorKernel assemble_green_serial(const LatticeGeometry& geom) {
  return assemble_green_impl(geom, false);
}

CoarseGreen coarse_green(const LatticeGeometry& geom, const OperatorKernel& g) {
  int nc = geom.num_coarse();
  double w = 1.0 / (geom.L() * geom.L());

  // plain matrices of Q (coarse x fine) and Q* (fine x coarse)
  Eigen::MatrixXd qg(nc, g.k.cols());
  for (int y = 0; y < nc; ++y) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.k.cols());
    for (int s : geom.box_sites(y)) row += g.k.row(s);
    qg.row(y) = w * row;
  }
  CoarseGreen out;
  out.qgq.domain = out.qgq.codomain = Domain::Coarse;
  out.qgq.block = 1;
  out.qgq.geom = &geom;
  out.qgq.symmetric = true;
  out.qgq.k.resize(nc, nc);
  for (int y = 0; y < nc; ++y) {
    for (int z = 0; z < nc; ++z) {
      double sum = 0.0;
      for (int s : geom.box_sites(z)) sum += qg(y, s);
      out.qgq.k(y, z) = sum;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.qgq.k);
  out.smallest_eigenvalue = es.eigenvalues().minCoeff();
  if (out.smallest_eigenvalue <= 0.0)
    throw InvariantViolation("Q G Q* is not strictly positive (min eigenvalue " +
                             std::to_string(out.smallest_eigenvalue) + ")");

  out.qgq_inv = out.qgq;
  out.qgq_inv.k = out.qgq.k.fullPivLu().inverse();
  return out;
}

Eigen::MatrixXd assemble_d_matrix(const LatticeGeometry& geom, const Eigen::MatrixXd& qg,
                                  const VectorConfig& a, bool delta_r) {
  int nc = geom.num_coarse();
  RotationField rot = RotationField::build(a);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3 * nc, 3 * nc);
  for (int y = 0; y < nc; ++y) {
    for (int z = 0; z < nc; ++z) {
      Eigen::Matrix3d blockacc = Eigen::Matrix3d::Zero();
      for (int s : geom.box_sites(z)) {
        Eigen::Matrix3d rs = rot.r_star[s];
        if (delta_r) rs -= Eigen::Matrix3d::Identity();
        blockacc += qg(y, s) * rs;
      }
      d.block<3, 3>(3 * y, 3 * z) = blockacc;
    }
  }
  return d;
}

namespace {

double block_row_sum_norm(const Eigen::MatrixXd& m, int block) {
  int rows = int(m.rows()) / block;
  int cols = int(m.cols()) / block;
  double worst = 0.0;
  for (int i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      if (block == 1) {
        sum += std::abs(m(i, j));
      } else {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(m.block<3, 3>(3 * i, 3 * j));
        sum += svd.singularValues()(0);
      }
    }
    worst = std::max(worst, sum);
  }
  return worst;
}

}  // namespace

DInverse d_operator_inverse(const LatticeGeometry& geom, const OperatorKernel& g,
                            const VectorConfig& a, DMethod method) {
  if (a.sup_norm() >= 1.0)
    throw InvalidParameter("d_operator_inverse requires sup|A| < 1");
  int nc = geom.num_coarse();
  double w = 1.0 / (geom.L() * geom.L());
  Eigen::MatrixXd qg(nc, g.k.cols());
  for (int y = 0; y < nc; ++y) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.k.cols());
    for (int s : geom.box_sites(y)) row += g.k.row(s);
    qg.row(y) = w * row;
  }

  DInverse out;
  out.inv.domain = out.inv.codomain = Domain::Coarse;
  out.inv.block = 3;
  out.inv.geom = &geom;

  if (method == DMethod::Direct) {
    Eigen::MatrixXd d = assemble_d_matrix(geom, qg, a, false);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
    if (!lu.isInvertible()) throw SingularOperator("D_A is numerically singular");
    out.inv.k = lu.inverse();
    return out;
  }

  // Neumann route: D_A = (QGQ*)(1 + (QGQ*)^-1 QG dR*_A Q*), expand the second
  // factor's inverse as a geometric series in S.
  CoarseGreen cg = coarse_green(geom, g);
  Eigen::MatrixXd delta_d = assemble_d_matrix(geom, qg, a, true);
  Eigen::MatrixXd qgq_inv3 = Eigen::MatrixXd::Zero(3 * nc, 3 * nc);
  for (int y = 0; y < nc; ++y)
    for (int z = 0; z < nc; ++z)
      qgq_inv3.block<3, 3>(3 * y, 3 * z) =
          cg.qgq_inv.k(y, z) * Eigen::Matrix3d::Identity();
  Eigen::MatrixXd s = qgq_inv3 * delta_d;

  out.contraction_factor = block_row_sum_norm(s, 3);
  if (out.contraction_factor >= 1.0)
    throw NoConvergence("Neumann series for D_A^-1 does not contract (factor " +
                            std::to_string(out.contraction_factor) + ")",
                        out.contraction_factor);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(3 * nc, 3 * nc);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(3 * nc, 3 * nc);
  int k = 0;
  for (; k < 400; ++k) {
    term = -(s * term).eval();
    sum += term;
    if (block_row_sum_norm(term, 3) < 1e-16) break;
  }
  out.series_terms = k + 1;
  out.inv.k = sum * qgq_inv3;
  return out;
}

double linf_operator_norm(const OperatorKernel& k) { return block_row_sum_norm(k.k, k.block); }
double linf_operator_norm_serial(const OperatorKernel& k) {
  return block_row_sum_norm(k.k, k.block);
}

DecayFit decay_fit(const OperatorKernel& kern) {
  constexpr double kFloor = 1e-14;
  int np = kern.points(kern.domain);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  double rmax = 0.0;
  for (int i = 0; i < np; ++i) {
    Coord ci = kern.coord(kern.codomain, i);
    for (int j = 0; j < np; ++j) {
      if (i == j) continue;
      double norm;
      if (kern.block == 1) {
        norm = std::abs(kern.k(i, j));
      } else {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(kern.k.block<3, 3>(3 * i, 3 * j));
        norm = svd.singularValues()(0);
      }
      if (norm < kFloor) continue;
      Coord cj = kern.coord(kern.domain, j);
      double r = std::hypot(double(ci.x0 - cj.x0), double(ci.x1 - cj.x1));
      double lg = std::log(norm);
      sx += r;
      sy += lg;
      sxx += r * r;
      sxy += r * lg;
      ++n;
      rmax = std::max(rmax, r);
    }
  }
  if (n < 2) throw DegenerateFit("no off-diagonal entries above the floor to fit");
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw DegenerateFit("distance samples are degenerate");
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;

  // second pass for the fit residual
  double ss = 0.0;
  for (int i = 0; i < np; ++i) {
    Coord ci = kern.coord(kern.codomain, i);
    for (int j = 0; j < np; ++j) {
      if (i == j) continue;
      double norm;
      if (kern.block == 1) {
        norm = std::abs(kern.k(i, j));
      } else {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(kern.k.block<3, 3>(3 * i, 3 * j));
        norm = svd.singularValues()(0);
      }
      if (norm < kFloor) continue;
      Coord cj = kern.coord(kern.domain, j);
      double r = std::hypot(double(ci.x0 - cj.x0), double(ci.x1 - cj.x1));
      double e = std::log(norm) - (intercept + slope * r);
      ss += e * e;
    }
  }
  DecayFit fit;
  fit.C = std::exp(intercept);
  fit.C1 = -slope;
  fit.residual = std::sqrt(ss / n);
  fit.max_distance = rmax;
  fit.points = n;
  return fit;
}

}  // namespace pcm
