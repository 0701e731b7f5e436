#include "pcm/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace pcm {

namespace {

void project_block_mean_zero(const LatticeGeometry& geom, std::vector<Eigen::Vector3d>& f) {
  double w = 1.0 / (geom.L() * geom.L());
  for (int y = 0; y < geom.num_coarse(); ++y) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int s : geom.box_sites(y)) mean += f[s];
    mean *= w;
    for (int s : geom.box_sites(y)) f[s] -= mean;
  }
}

double sup_norm(const std::vector<Eigen::Vector3d>& f) {
  double s = 0.0;
  for (const auto& v : f) s = std::max(s, v.norm());
  return s;
}

std::vector<Eigen::Vector3d> fd_gradient(const CoarseConfig& v, VectorConfig& a, double h) {
  const LatticeGeometry& geom = *a.geom;
  std::vector<Eigen::Vector3d> g(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s) {
    for (int c = 0; c < 3; ++c) {
      double saved = a.a[s](c);
      a.a[s](c) = saved + h;
      double fp = action(assemble_fine(a, v));
      a.a[s](c) = saved - h;
      double fm = action(assemble_fine(a, v));
      a.a[s](c) = saved;
      g[s](c) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

// Exact ambient gradient: moving A along the left-multiplication flow with
// direction X changes A at rate R_A X, so grad F = 2 (R_A^-1)^T d* w with
// w the bond vector of dU. Everything here is local to the oracle.
std::vector<Eigen::Vector3d> ambient_gradient(const CoarseConfig& v, const VectorConfig& a) {
  const LatticeGeometry& geom = *a.geom;
  FineConfig u = assemble_fine(a, v);
  std::vector<Eigen::Vector3d> dstar_w(geom.num_sites(), Eigen::Vector3d::Zero());
  for (int b = 0; b < geom.num_bonds(); ++b) {
    const Bond& bond = geom.bonds()[b];
    Eigen::Vector3d w = su2_mul(u.u[bond.minus], u.u[bond.plus].conj()).vec();
    dstar_w[bond.minus] += w;
    dstar_w[bond.plus] -= w;
  }
  std::vector<Eigen::Vector3d> g(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s) {
    const Eigen::Vector3d& av = a.a[s];
    double a0 = std::sqrt(std::max(0.0, 1.0 - av.squaredNorm()));
    Eigen::Matrix3d r = a0 * Eigen::Matrix3d::Identity();
    r(0, 1) -= av.z();
    r(0, 2) += av.y();
    r(1, 0) += av.z();
    r(1, 2) -= av.x();
    r(2, 0) -= av.y();
    r(2, 1) += av.x();
    g[s] = 2.0 * r.inverse().transpose() * dstar_w[s];
  }
  return g;
}

}  // namespace

OracleResult oracle_minimize(const CoarseConfig& v, double eps, const OracleConfig& cfg) {
  const LatticeGeometry& geom = *v.geom;
  OracleResult res;
  res.a = VectorConfig::zero(geom);

  double f = action(assemble_fine(res.a, v));
  double step = cfg.init_step;
  for (int it = 0; it < cfg.max_steps; ++it) {
    std::vector<Eigen::Vector3d> g =
        cfg.gradient == OracleConfig::Gradient::FiniteDifference
            ? fd_gradient(v, res.a, cfg.fd_step)
            : ambient_gradient(v, res.a);
    project_block_mean_zero(geom, g);
    double gnorm = sup_norm(g);
    res.report.history.push_back({f, gnorm, step});
    res.report.steps = it;
    if (gnorm <= cfg.grad_tol) {
      res.report.converged = true;
      break;
    }

    // backtracking with a mild growth; steps leaving |A| < 1 are rejected
    double g2 = 0.0;
    for (const auto& vec : g) g2 += vec.squaredNorm();
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      VectorConfig trial = res.a;
      bool inside = true;
      for (int s = 0; s < geom.num_sites(); ++s) {
        trial.a[s] -= step * g[s];
        if (trial.a[s].squaredNorm() >= 1.0) {
          inside = false;
          break;
        }
      }
      if (inside) {
        project_block_mean_zero(geom, trial.a);
        double ftrial = action(assemble_fine(trial, v));
        if (ftrial <= f - 1e-4 * step * g2) {
          res.a = std::move(trial);
          f = ftrial;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.report.diverged = true;
      break;
    }
    step = std::min(step * 1.5, 4.0);
  }
  res.report.final_f = f;
  res.report.final_grad_norm = res.report.history.empty()
                                   ? 0.0
                                   : res.report.history.back().grad_norm;
  (void)eps;
  return res;
}

}  // namespace pcm
