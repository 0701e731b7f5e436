#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pcm/fields.hpp"
#include "pcm/green.hpp"

namespace pcm {

// Green operators assembled once per geometry and shared read-only.
struct GreenPack {
  const LatticeGeometry* geom = nullptr;
  OperatorKernel g;        // G(Omega), scalar fine kernel
  OperatorKernel qgq;      // Q G Q*
  OperatorKernel qgq_inv;  // (Q G Q*)^-1
  Eigen::MatrixXd qg;      // coarse rows of G (plain Q G), for D_A assembly
  double coarse_smallest_eigenvalue = 0.0;
};

GreenPack make_green_pack(const LatticeGeometry& geom);

struct SolverConfig {
  double eps = 0.05;
  double eps1 = -1.0;  // defaults to eps^2/2; values above eps^2 carry a warning
  int max_iter = 200;
  double tol_residual = 1e-12;
  double tol_constraint = 1e-10;
  double tol_conservation = 1e-8;
  double tol_lie = 1e-8;
  int contraction_samples = 50;

  double effective_eps1() const { return eps1 < 0.0 ? 0.5 * eps * eps : eps1; }
  bool eps1_overridden() const { return eps1 >= 0.0 && eps1 > eps * eps; }
};

struct IterateDiagnostics {
  double residual = 0.0;        // ||A_k - A_{k-1}||_inf
  double sup_a = 0.0;           // sup_x |A(x)|
  double sup_qa = 0.0;          // constraint sup |Q A|
  double small_field = 0.0;     // d_0(A, 0) of the assembled configuration
  bool in_x_eps = false;        // sup_a <= 4 c_half L^2 eps and small_field <= eps
  bool in_x_eps_tight = false;  // the L (not L^2) variant of the sup bound
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;  // ||A - T(A)||_inf at the returned point
  std::vector<IterateDiagnostics> history;
  std::vector<double> contraction_factors;  // residual ratios
  bool eps1_warning = false;
};

struct SolveResult {
  VectorConfig a;
  SolveReport report;
};

// One evaluation of T(A) = (G R*_A Q* D_A^-1 Q - 1) G d* r_A. The output
// satisfies Q(T(A)) = 0 identically.
VectorConfig t_map(const VectorConfig& a, const CoarseConfig& v, const GreenPack& pack);

// Banach iteration from A = 0 (or the supplied start) until the residual
// drops below tolerance. Non-convergence is reported, not thrown.
SolveResult solve_critical(const CoarseConfig& v, const SolverConfig& cfg,
                           const GreenPack& pack,
                           const std::optional<VectorConfig>& start = std::nullopt);

struct VerificationReport {
  double sup_qa = 0.0;               // constraint
  double conservation_spread = 0.0;  // max over boxes of the spread of R^-1* d* w
  double max_lie = 0.0;              // max |tangential Lie derivative|
  double small_field = 0.0;          // d_0 of the assembled configuration
  double tol_constraint = 0.0, tol_conservation = 0.0, tol_lie = 0.0, eps = 0.0;
  bool pass_constraint = false, pass_conservation = false, pass_lie = false,
       pass_small_field = false;
  bool pass() const {
    return pass_constraint && pass_conservation && pass_lie && pass_small_field;
  }
};

VerificationReport verify_critical(const VectorConfig& a, const CoarseConfig& v,
                                   const SolverConfig& cfg);

struct ContractionEstimate {
  double q = 0.0;
  std::vector<double> quotients;
};

// max of ||T(A1) - T(A2)||_inf / ||A1 - A2||_inf over sampled pairs in X_eps.
ContractionEstimate estimate_contraction(const CoarseConfig& v, const SolverConfig& cfg,
                                         const GreenPack& pack, std::uint64_t seed);

}  // namespace pcm
