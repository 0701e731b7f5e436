#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "pcm/errors.hpp"

namespace pcm::rw {

// Truncated d-dimensional lattice [lo, hi]^d (d = 1 or 2) standing in for
// Z^d; users certify results by checking stability under window doubling.
struct Window {
  int d = 2;
  int lo = 0;
  int hi = 0;

  int side() const { return hi - lo + 1; }
  int num_sites() const { return d == 1 ? side() : side() * side(); }
  std::array<int, 2> coord(int id) const {
    if (d == 1) return {lo + id, 0};
    return {lo + id % side(), lo + id / side()};
  }
  int id(int x0, int x1 = 0) const {
    return d == 1 ? x0 - lo : (x1 - lo) * side() + (x0 - lo);
  }
  bool contains(int x0, int x1 = 0) const {
    return x0 >= lo && x0 <= hi && (d == 1 || (x1 >= lo && x1 <= hi));
  }
};

// -Delta + Q*Q on the window (boxes of side L aligned to multiples of L,
// truncated at the window edge; Neumann closure).
Eigen::MatrixXd window_operator(const Window& w, int L);

// Cover of the window by closed 2M-cubes centered at j*M; cubes i, j overlap
// iff |i-j| <= 2 sqrt(d).
struct BoxCover {
  int m_tilde = 0;
  int d = 2;
  std::vector<std::array<int, 2>> centers;   // cube indices j
  std::vector<std::vector<int>> cube_sites;  // window site ids per cube
};

// h_j(x) = prod_k h(x_k/M - j_k) built from the cubic smoothstep, so that
// sum_j h_j^2 = 1 exactly and supp h_j lies inside cube j.
struct PartitionOfUnity {
  static double profile(double t);  // h(t): 1 for |t|<=1/3, 0 for |t|>=2/3
  std::vector<Eigen::VectorXd> h;   // one diagonal per cube, over window sites
};

std::pair<BoxCover, PartitionOfUnity> build_partition(const Window& w, int m_tilde);

struct RwExpansion {
  int m_tilde = 0;
  int order = 0;
  double m2 = 0.0;  // smallest eigenvalue of A (strict positivity constant)
  Eigen::MatrixXd approx_c;  // C = sum_j h_j C_j h_j
  Eigen::MatrixXd rest;      // R with A C = 1 - R
  Eigen::MatrixXd inverse;   // sum_{k<=order} C R^k
  double norm_r_power = 0.0;        // sharp ||R||_op estimate (power iteration)
  double norm_r_block_bound = 0.0;  // 2^d m^-2 sqrt(sup_i sum_j)sqrt(sup_j sum_i)
  double residual = 0.0;            // ||A*inverse - 1||_inf (max abs row sum)
  std::vector<double> residual_history;
  std::vector<int> residual_orders;
  // block data R_{i,j} for the certificate and decay diagnostics
  std::vector<std::array<int, 4>> block_index;  // (i0,i1,j0,j1)
  std::vector<double> block_norm;
  double block_consistency = 0.0;  // max |sum_ij R_ij C_j h_j - R|
};

// Approximate inverse via local box inverses glued by the partition of unity
// plus the geometrically convergent correction series. Throws NoConvergence
// when the power-iteration estimate of ||R|| reaches 1 (retry with larger M).
RwExpansion rw_inverse(const Window& w, const Eigen::MatrixXd& a, int m_tilde, int order,
                       bool parallel = true);

struct SrlReport {
  double delta = 0.0;
  int d = 2;
  int range = 0;
  bool pass_positive = false;
  bool pass_decay = false;       // (ii) with fitted c_delta
  bool pass_ratio = false;       // (iii) with fitted K
  bool pass_convolution = false; // (iv) with fitted c at eps
  bool pass_monotone = false;    // (v) with fitted M0
  double c_delta = 0.0;
  double ratio_k = 0.0;
  double conv_c = 0.0;
  double conv_eps = 0.25;
  double m0 = 0.0;
  std::string witness;  // worst offender of the first failing property
  bool pass() const {
    return pass_positive && pass_decay && pass_ratio && pass_convolution && pass_monotone;
  }
};

// Numerical check of the short-range-localizing properties of a profile on
// the sampled range. Failures are reported, not thrown.
SrlReport srl_check(const std::function<double(double, double)>& a, int d, double delta,
                    int range);

}  // namespace pcm::rw
