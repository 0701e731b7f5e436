#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <map>
#include <memory>
#include <vector>

#include "pcm/green.hpp"
#include "pcm/lattice.hpp"

namespace pcm {

// (-Delta + Q*Q)^-1 on a box-aligned window around Omega standing in for the
// free-lattice kernel; Neumann closure at the window edge, certified by a
// stability probe under window doubling. Columns of the fine kernel and of
// the coarse inverse (Q G Q*)^-1 are solved on demand and cached.
class TruncatedFreeGreen {
 public:
  TruncatedFreeGreen(const LatticeGeometry& geom, int radius, double stability_tol = 1e-6);

  int radius() const { return radius_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }
  double stability_delta() const { return stability_delta_; }
  const LatticeGeometry& geom() const { return *geom_; }

  bool contains(const Coord& p) const {
    return p.x0 >= lo_ && p.x0 <= hi_ && p.x1 >= lo_ && p.x1 <= hi_;
  }
  bool contains_coarse(const Coord& p) const {
    return p.x0 % L_ == 0 && p.x1 % L_ == 0 && contains(p) &&
           p.x0 + L_ - 1 <= hi_ && p.x1 + L_ - 1 <= hi_;
  }

  // free kernel entry G(x, z); the column at z is solved once and cached
  double value(const Coord& x, const Coord& z) const;

  // coarse free kernel (Q G Q*)(y, z) and its inverse entry, plain matrices
  double coarse_value(const Coord& y, const Coord& z) const;
  double coarse_inverse_value(const Coord& y, const Coord& z) const;

  // apply the window operator -Delta + Q*Q to a window field
  Eigen::VectorXd apply_operator(const Eigen::VectorXd& f) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& f) const;

  int window_side() const { return hi_ - lo_ + 1; }
  int window_sites() const { return window_side() * window_side(); }
  int window_id(const Coord& p) const {
    return (p.x1 - lo_) * window_side() + (p.x0 - lo_);
  }
  Coord window_coord(int id) const {
    return {lo_ + id % window_side(), lo_ + id / window_side()};
  }
  int coarse_window_id(const Coord& p) const;
  Coord coarse_window_coord(int id) const;
  int coarse_window_sites() const { return n1w_ * n1w_; }

  // orbit-average a raw window field; the result satisfies the reflection
  // relations of the Neumann-compatible subspace exactly
  Eigen::VectorXd symmetrize(const Eigen::VectorXd& raw) const;

  // log-linear decay fits over the cached columns (long-range data from the
  // window); used to derive truncation-tail tolerances at runtime
  DecayFit fine_decay_fit() const;
  DecayFit coarse_inverse_decay_fit() const;

 private:
  void build(int lo, int hi);
  Eigen::VectorXd solve_coarse_inverse_column(const Coord& z) const;

  const LatticeGeometry* geom_ = nullptr;
  int L_ = 0, n_ = 0, radius_ = 0;
  int lo_ = 0, hi_ = 0;
  int n1w_ = 0;  // coarse boxes per side in the window
  double stability_delta_ = 0.0;
  Eigen::SparseMatrix<double> op_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> solver_;
  mutable std::map<int, Eigen::VectorXd> fine_columns_;        // by window id of z
  mutable std::map<int, Eigen::VectorXd> coarse_inv_columns_;  // by coarse window id
  mutable std::map<int, Eigen::VectorXd> coarse_fwd_columns_;
};

TruncatedFreeGreen truncated_free_green(const LatticeGeometry& geom, int radius);

struct ImageDeviation {
  double max_deviation = 0.0;
  int samples = 0;
  struct Offender {
    Coord x, z;
    double deviation;
    double neumann_value;
    double image_sum;
  };
  std::vector<Offender> worst;  // a few worst pairs, sorted by deviation
};

// |G(Omega)(x,z) - sum over images of z of the free kernel|, max over pairs.
// samples = 0 runs all (x,z) in Omega^2; free-kernel values at reflected
// points are evaluated by folding the reflection back onto the cached column.
// image_radius = -1 truncates the image sum at the window radius; smaller
// values expose the truncation tail for radius-doubling comparisons.
ImageDeviation fine_image_check(const LatticeGeometry& geom, const TruncatedFreeGreen& free_g,
                                const OperatorKernel& g_neumann, int samples,
                                std::uint64_t seed = 0, bool parallel = true,
                                int image_radius = -1);

// Same for (Q G(Omega) Q*)^-1 against the coarse image sum.
ImageDeviation coarse_image_check(const LatticeGeometry& geom,
                                  const TruncatedFreeGreen& free_g,
                                  const OperatorKernel& qgq_inv_neumann, int samples,
                                  std::uint64_t seed = 0, bool parallel = true,
                                  int image_radius = -1);

struct SubspaceReport {
  bool member = false;
  std::string violation;  // which boundary relation failed, when not a member
  std::vector<double> power_deviation;  // per power 1..ell
  double inverse_deviation = 0.0;
  bool pass = false;
};

// For f in the Neumann-compatible subspace of the window, applying powers of
// (-Delta + Q*Q) (and the corresponding inverses) commutes with restriction
// to Omega. f failing the membership relations yields a report, not a throw.
SubspaceReport neumann_subspace_check(const TruncatedFreeGreen& free_g,
                                      const OperatorKernel& g_neumann,
                                      const Eigen::VectorXd& f, int powers,
                                      double tol = 1e-9);

}  // namespace pcm
