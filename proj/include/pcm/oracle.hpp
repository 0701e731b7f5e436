#pragma once

#include <vector>

#include "pcm/fields.hpp"

namespace pcm {

// Independent cross-check of the fixed-point solver: direct minimization of
// the action over block-mean-zero fluctuation fields. Shares only the action,
// the assembly map and the block mean with the main path; no Green operators,
// no R_A, no remainder formula.
struct OracleConfig {
  enum class Gradient { FiniteDifference, AlgebraicAmbient };
  Gradient gradient = Gradient::FiniteDifference;
  int max_steps = 5000;
  double grad_tol = 1e-8;   // stopping tolerance on sup|projected gradient|
  double fd_step = 1e-6;    // central-difference step
  double init_step = 0.25;  // initial line-search step
};

struct OracleStep {
  double f = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
};

struct OracleReport {
  bool converged = false;
  bool diverged = false;
  int steps = 0;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  std::vector<OracleStep> history;
};

struct OracleResult {
  VectorConfig a;
  OracleReport report;
};

// Projected gradient descent on F(A) = action(assemble_fine(A, V)) with a
// monotone line search; the block-mean projection is applied to the gradient
// and the constraint sum_B A = 0 is re-projected after every step.
OracleResult oracle_minimize(const CoarseConfig& v, double eps, const OracleConfig& cfg);

}  // namespace pcm
