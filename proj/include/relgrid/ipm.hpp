#pragma once

#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCore>

#include "relgrid/conic.hpp"

namespace relgrid {

/// Standard-form cone problem
///   minimize   ½ xᵀ diag(p_diag) x + qᵀx
///   subject to A x = b,  G x + s = h,  s ∈ K,
/// where K = R₊^{nonneg} × Q^{soc_dims[0]} × Q^{soc_dims[1]} × …
struct StandardConeProblem {
  Eigen::VectorXd p_diag;  // diagonal quadratic objective, ≥ 0
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  int nonneg = 0;
  std::vector<int> soc_dims;  // each ≥ 2

  int cone_size() const {
    int m = nonneg;
    for (int d : soc_dims) m += d;
    return m;
  }
};

struct IpmResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x, y, z, s;
  double objective = 0.0;  // ½xᵀPx + qᵀx, no constant
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step.
IpmResult solve_standard(const StandardConeProblem& prob, const SolverOptions& opts);

/// Lowering of a ConicProgram to standard form. Variables fixed by their
/// bounds are substituted out; `var_map[j]` is the standard-form column of
/// program variable j, or -1 when fixed (then `fixed_value[j]` holds it).
struct StandardFormMap {
  StandardConeProblem problem;
  std::vector<int> var_map;
  std::vector<double> fixed_value;
  double objective_constant = 0.0;
};

StandardFormMap to_standard_form(const ConicProgram& program);

}  // namespace relgrid
