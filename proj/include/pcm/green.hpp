#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcm/calculus.hpp"
#include "pcm/lattice.hpp"

namespace pcm {

enum class Domain { Fine, Coarse };

// Dense kernel of a linear map between lattice function spaces, stored as the
// plain action matrix: (Kf)(x) = sum_x' k(x,x') f(x'). For coarse domains the
// paper-normalized kernel (matrix elements between weighted deltas) is the
// stored matrix divided by L^2, so plain row sums realize the weighted
// row-sum bound verbatim.
struct OperatorKernel {
  Domain domain = Domain::Fine;
  Domain codomain = Domain::Fine;
  int block = 1;  // 1 for componentwise (scalar) kernels, 3 for vector ones
  const LatticeGeometry* geom = nullptr;
  Eigen::MatrixXd k;
  bool symmetric = false;

  int points(Domain d) const {
    return d == Domain::Fine ? geom->num_sites() : geom->num_coarse();
  }
  Coord coord(Domain d, int i) const {
    return d == Domain::Fine ? geom->site_coord(i) : geom->coarse_coord(i);
  }
  Eigen::Block<const Eigen::MatrixXd> at(int i, int j) const {
    return k.block(i * block, j * block, block, block);
  }
};

// -Delta_Omega + Q*Q as a dense scalar matrix (the stencil plus the
// block-average projection).
Eigen::MatrixXd green_operator_matrix(const LatticeGeometry& geom);

// G(Omega) = (-Delta_Omega + Q*Q)^-1 via dense Cholesky, componentwise on R^3.
OperatorKernel assemble_green(const LatticeGeometry& geom);
OperatorKernel assemble_green_serial(const LatticeGeometry& geom);

struct CoarseGreen {
  OperatorKernel qgq;      // Q G(Omega) Q*
  OperatorKernel qgq_inv;  // its dense inverse
  double smallest_eigenvalue = 0.0;
};

CoarseGreen coarse_green(const LatticeGeometry& geom, const OperatorKernel& g);

enum class DMethod { Direct, Neumann };

struct DInverse {
  OperatorKernel inv;               // (Q G R*_A Q*)^-1, 3x3-blocked coarse kernel
  double contraction_factor = 0.0;  // row-sum norm of the series term (Neumann)
  int series_terms = 0;
};

// Inverse of D_A = Q G(Omega) R*_A Q* on coarse vector fields. The Neumann
// route expands (1 + (QGQ*)^-1 QG dR*_A Q*)^-1 and reports the contraction
// factor; the direct route is a dense LU inverse.
DInverse d_operator_inverse(const LatticeGeometry& geom, const OperatorKernel& g,
                            const VectorConfig& a, DMethod method);

// Row-sum majorant sup_x sum_x' ||K(x,x')|| of the (inf,inf) operator norm;
// exact for scalar kernels, an upper bound for blocked ones. Stored plain
// matrices make this the weighted bound on coarse domains.
double linf_operator_norm(const OperatorKernel& k);
double linf_operator_norm_serial(const OperatorKernel& k);

struct DecayFit {
  double C = 0.0;         // prefactor estimate
  double C1 = 0.0;        // decay rate estimate (positive = decaying)
  double residual = 0.0;  // rms of the log-linear fit
  double max_distance = 0.0;
  int points = 0;
};

// Least-squares fit of log||K(x,x')|| against |x-x'| over off-diagonal
// entries above a 1e-14 floor.
DecayFit decay_fit(const OperatorKernel& k);

// Assembly helper shared by the solver: D_A as a dense 3-blocked coarse
// matrix, built from the precomputed coarse rows QG of the Green kernel.
Eigen::MatrixXd assemble_d_matrix(const LatticeGeometry& geom, const Eigen::MatrixXd& qg,
                                  const VectorConfig& a, bool delta_r = false);

}  // namespace pcm
