#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "relgrid/errors.hpp"

namespace relgrid {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Affine expression over program variables: terms·x + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(std::initializer_list<std::pair<int, double>> t, double c = 0.0)
      : terms(t), constant(c) {}
  LinExpr& add(int var, double coeff) {
    if (coeff != 0.0) terms.push_back({var, coeff});
    return *this;
  }
};

/// Sparse conic program:
///   minimize   qᵀx + ½ Σ_j P_jj x_j² + constant
///   subject to linear equalities, linear inequalities (expr ≤ 0),
///              second-order cones ‖rows[1..]‖ ≤ rows[0],
///              variable bounds, and declared binary variables.
/// Rotated cones x·y ≥ ‖z‖² are stored as the equivalent standard cone
/// ‖(x−y, 2z)‖ ≤ x+y.
class ConicProgram {
 public:
  int add_variable(const std::string& name, double lb = -kInfinity,
                   double ub = kInfinity);
  int variable_count() const { return static_cast<int>(names_.size()); }

  void set_bounds(int var, double lb, double ub);
  void fix(int var, double value) { set_bounds(var, value, value); }
  /// Lower priority values are branched first in the MISOCP search.
  void mark_binary(int var, int priority = 0);

  void add_objective_linear(int var, double coeff);
  void add_objective_quadratic(int var, double coeff);  // coeff·x², coeff ≥ 0
  void add_objective_constant(double c) { obj_constant_ += c; }
  void clear_quadratic_objective();

  void add_equality(LinExpr expr);               // expr = 0
  void add_inequality(LinExpr expr);             // expr ≤ 0
  void add_soc(std::vector<LinExpr> rows);       // ‖rows[1..]‖ ≤ rows[0]
  void add_rotated_soc(LinExpr x, LinExpr y, std::vector<LinExpr> z);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& lower() const { return lb_; }
  const std::vector<double>& upper() const { return ub_; }
  const std::vector<std::pair<int, int>>& binaries() const { return binaries_; }
  const std::vector<double>& objective_linear() const { return obj_linear_; }
  const std::vector<double>& objective_quadratic() const { return obj_quad_; }
  double objective_constant() const { return obj_constant_; }
  const std::vector<LinExpr>& equalities() const { return equalities_; }
  const std::vector<LinExpr>& inequalities() const { return inequalities_; }
  const std::vector<std::vector<LinExpr>>& cones() const { return cones_; }

  double evaluate_objective(const std::vector<double>& x) const;
  /// Sparse-triplet text dump for cross-checking with external solvers.
  std::string dump() const;

 private:
  void check_expr(const LinExpr& e) const;
  std::vector<std::string> names_;
  std::vector<double> lb_, ub_, obj_linear_, obj_quad_;
  double obj_constant_ = 0.0;
  std::vector<std::pair<int, int>> binaries_;  // (var, priority)
  std::vector<LinExpr> equalities_;
  std::vector<LinExpr> inequalities_;
  std::vector<std::vector<LinExpr>> cones_;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit, NumericalFailure };

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;       // by program variable index
  double objective = 0.0;      // includes the program constant
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool heuristic = false;      // incumbent found without a proven gap
};

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
};

struct BnbOptions {
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  int node_limit = 10000;
  double integrality_tol = 1e-6;
  SolverOptions solver;
};

/// Interior-point solve of the continuous (relaxed) program. Binary
/// declarations are ignored beyond their [lb,ub] boxes.
SolveResult solve_continuous(const ConicProgram& program,
                             const SolverOptions& options = {});

/// Best-bound branch and bound over the declared binaries.
SolveResult solve_misocp(const ConicProgram& program, const BnbOptions& options = {});

}  // namespace relgrid
