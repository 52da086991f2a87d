#include "relgrid/conic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relgrid/ipm.hpp"
#include "relgrid/runio.hpp"

namespace relgrid {

int ConicProgram::add_variable(const std::string& name, double lb, double ub) {
  if (lb > ub)
    throw InputError("variable " + name + ": lower bound exceeds upper bound");
  names_.push_back(name);
  lb_.push_back(lb);
  ub_.push_back(ub);
  obj_linear_.push_back(0.0);
  obj_quad_.push_back(0.0);
  return static_cast<int>(names_.size()) - 1;
}

void ConicProgram::set_bounds(int var, double lb, double ub) {
  if (var < 0 || var >= variable_count())
    throw InputError("unknown variable index " + std::to_string(var));
  if (lb > ub)
    throw InputError("variable " + names_[var] + ": lower bound exceeds upper bound");
  lb_[var] = lb;
  ub_[var] = ub;
}

void ConicProgram::mark_binary(int var, int priority) {
  if (var < 0 || var >= variable_count())
    throw InputError("unknown variable index " + std::to_string(var));
  binaries_.push_back({var, priority});
}

void ConicProgram::add_objective_linear(int var, double coeff) {
  if (var < 0 || var >= variable_count())
    throw InputError("unknown variable index " + std::to_string(var));
  obj_linear_[var] += coeff;
}

void ConicProgram::add_objective_quadratic(int var, double coeff) {
  if (var < 0 || var >= variable_count())
    throw InputError("unknown variable index " + std::to_string(var));
  if (coeff < 0)
    throw InputError("quadratic objective coefficient must be >= 0 (variable " +
                     names_[var] + ")");
  obj_quad_[var] += coeff;
}

void ConicProgram::clear_quadratic_objective() {
  std::fill(obj_quad_.begin(), obj_quad_.end(), 0.0);
}

void ConicProgram::check_expr(const LinExpr& e) const {
  for (auto [v, c] : e.terms) {
    if (v < 0 || v >= variable_count())
      throw InputError("expression references unknown variable index " +
                       std::to_string(v));
    if (!std::isfinite(c)) throw InputError("non-finite coefficient in expression");
  }
}

void ConicProgram::add_equality(LinExpr expr) {
  check_expr(expr);
  equalities_.push_back(std::move(expr));
}

void ConicProgram::add_inequality(LinExpr expr) {
  check_expr(expr);
  inequalities_.push_back(std::move(expr));
}

void ConicProgram::add_soc(std::vector<LinExpr> rows) {
  if (rows.size() < 2) throw InputError("a second-order cone needs at least 2 rows");
  for (const auto& r : rows) check_expr(r);
  cones_.push_back(std::move(rows));
}

void ConicProgram::add_rotated_soc(LinExpr x, LinExpr y, std::vector<LinExpr> z) {
  // x·y ≥ ‖z‖², x,y ≥ 0  ⇔  ‖(x−y, 2z)‖ ≤ x+y
  check_expr(x);
  check_expr(y);
  std::vector<LinExpr> rows;
  LinExpr sum = x, diff = x;
  sum.constant += y.constant;
  diff.constant -= y.constant;
  for (auto [v, c] : y.terms) {
    sum.terms.push_back({v, c});
    diff.terms.push_back({v, -c});
  }
  rows.push_back(std::move(sum));
  rows.push_back(std::move(diff));
  for (auto& zi : z) {
    check_expr(zi);
    LinExpr two = zi;
    two.constant *= 2.0;
    for (auto& t : two.terms) t.second *= 2.0;
    rows.push_back(std::move(two));
  }
  cones_.push_back(std::move(rows));
}

double ConicProgram::evaluate_objective(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != variable_count())
    throw DimensionMismatch("point size does not match the variable count");
  double obj = obj_constant_;
  for (int j = 0; j < variable_count(); ++j)
    obj += obj_linear_[j] * x[j] + obj_quad_[j] * x[j] * x[j];
  return obj;
}

namespace {

double eval_expr(const LinExpr& e, const std::vector<double>& lb,
                 const std::vector<int>& var_map, const std::vector<double>& fixed) {
  double v = e.constant;
  for (auto [j, c] : e.terms)
    if (var_map[j] < 0) v += c * fixed[j];
  (void)lb;
  return v;
}

}  // namespace

StandardFormMap to_standard_form(const ConicProgram& p) {
  StandardFormMap out;
  const int n = p.variable_count();
  out.var_map.assign(n, -1);
  out.fixed_value.assign(n, 0.0);
  int cols = 0;
  for (int j = 0; j < n; ++j) {
    if (p.lower()[j] == p.upper()[j]) {
      out.fixed_value[j] = p.lower()[j];
    } else {
      out.var_map[j] = cols++;
    }
  }
  StandardConeProblem& sp = out.problem;
  sp.q = Eigen::VectorXd::Zero(cols);
  sp.p_diag = Eigen::VectorXd::Zero(cols);
  out.objective_constant = p.objective_constant();
  for (int j = 0; j < n; ++j) {
    const int c = out.var_map[j];
    if (c >= 0) {
      sp.q[c] = p.objective_linear()[j];
      sp.p_diag[c] = 2.0 * p.objective_quadratic()[j];
    } else {
      const double v = out.fixed_value[j];
      out.objective_constant += p.objective_linear()[j] * v +
                                p.objective_quadratic()[j] * v * v;
    }
  }

  // Equalities.
  std::vector<Eigen::Triplet<double>> ta;
  std::vector<double> bvals;
  for (const auto& e : p.equalities()) {
    double rhs = -e.constant;
    double rowmax = 0.0;
    std::vector<std::pair<int, double>> cols_in_row;
    for (auto [j, c] : e.terms) {
      if (out.var_map[j] >= 0) {
        cols_in_row.push_back({out.var_map[j], c});
        rowmax = std::max(rowmax, std::abs(c));
      } else {
        rhs -= c * out.fixed_value[j];
      }
    }
    if (cols_in_row.empty()) {
      if (std::abs(rhs) > 1e-9)
        throw Infeasible("fixed variables violate an equality by " +
                         format_number(rhs));
      continue;
    }
    const double scale = 1.0 / std::max(rowmax, 1e-12);
    const int row = static_cast<int>(bvals.size());
    for (auto [c, v] : cols_in_row) ta.push_back({row, c, v * scale});
    bvals.push_back(rhs * scale);
  }
  sp.A.resize(static_cast<int>(bvals.size()), cols);
  sp.A.setFromTriplets(ta.begin(), ta.end());
  sp.b = Eigen::Map<Eigen::VectorXd>(bvals.data(), bvals.size());

  // Inequalities and bounds form the non-negative orthant part of G.
  std::vector<Eigen::Triplet<double>> tg;
  std::vector<double> hvals;
  auto push_orthant_row = [&](const std::vector<std::pair<int, double>>& terms,
                              double rhs) {
    double rowmax = 0.0;
    for (auto [c, v] : terms) rowmax = std::max(rowmax, std::abs(v));
    const double scale = 1.0 / std::max(rowmax, 1e-12);
    const int row = static_cast<int>(hvals.size());
    for (auto [c, v] : terms) tg.push_back({row, c, v * scale});
    hvals.push_back(rhs * scale);
  };
  for (const auto& e : p.inequalities()) {
    double rhs = -e.constant;
    std::vector<std::pair<int, double>> cols_in_row;
    for (auto [j, c] : e.terms) {
      if (out.var_map[j] >= 0)
        cols_in_row.push_back({out.var_map[j], c});
      else
        rhs -= c * out.fixed_value[j];
    }
    if (cols_in_row.empty()) {
      if (rhs < -1e-9)
        throw Infeasible("fixed variables violate an inequality by " +
                         format_number(-rhs));
      continue;
    }
    push_orthant_row(cols_in_row, rhs);
  }
  for (int j = 0; j < n; ++j) {
    const int c = out.var_map[j];
    if (c < 0) continue;
    if (p.lower()[j] > -kInfinity) push_orthant_row({{c, -1.0}}, -p.lower()[j]);
    if (p.upper()[j] < kInfinity) push_orthant_row({{c, 1.0}}, p.upper()[j]);
  }
  sp.nonneg = static_cast<int>(hvals.size());

  // Second-order cone blocks: s_block = h_block − G_block x must equal the
  // cone row expressions, so G carries the negated coefficients.
  for (const auto& cone : p.cones()) {
    double blockmax = 0.0;
    bool any_free = false;
    for (const auto& r : cone)
      for (auto [j, c] : r.terms)
        if (out.var_map[j] >= 0) {
          any_free = true;
          blockmax = std::max(blockmax, std::abs(c));
        }
    if (!any_free) {
      // Fully fixed cone: verify membership and drop it.
      double top = eval_expr(cone[0], p.lower(), out.var_map, out.fixed_value);
      double norm2 = 0.0;
      for (size_t r = 1; r < cone.size(); ++r) {
        double v = eval_expr(cone[r], p.lower(), out.var_map, out.fixed_value);
        norm2 += v * v;
      }
      if (top < 0 || top * top + 1e-9 < norm2)
        throw Infeasible("fixed variables violate a cone constraint");
      continue;
    }
    const double scale = 1.0 / std::max(blockmax, 1e-12);
    for (const auto& r : cone) {
      double rhs = r.constant;
      const int row = static_cast<int>(hvals.size());
      for (auto [j, c] : r.terms) {
        if (out.var_map[j] >= 0)
          tg.push_back({row, out.var_map[j], -c * scale});
        else
          rhs += c * out.fixed_value[j];
      }
      hvals.push_back(rhs * scale);
    }
    sp.soc_dims.push_back(static_cast<int>(cone.size()));
  }
  sp.G.resize(static_cast<int>(hvals.size()), cols);
  sp.G.setFromTriplets(tg.begin(), tg.end());
  sp.h = Eigen::Map<Eigen::VectorXd>(hvals.data(), hvals.size());
  return out;
}

std::string ConicProgram::dump() const {
  std::ostringstream os;
  os << "variables " << variable_count() << "\n";
  for (int j = 0; j < variable_count(); ++j) {
    os << "var " << j << " " << names_[j] << " " << format_number(lb_[j]) << " "
       << format_number(ub_[j]);
    if (obj_linear_[j] != 0) os << " c=" << format_number(obj_linear_[j]);
    if (obj_quad_[j] != 0) os << " q=" << format_number(obj_quad_[j]);
    os << "\n";
  }
  os << "objective_constant " << format_number(obj_constant_) << "\n";
  for (auto [v, pr] : binaries_) os << "binary " << v << " priority " << pr << "\n";
  auto emit_expr = [&os](const LinExpr& e) {
    for (auto [j, c] : e.terms) os << " " << j << ":" << format_number(c);
    os << " const:" << format_number(e.constant) << "\n";
  };
  for (const auto& e : equalities_) {
    os << "eq";
    emit_expr(e);
  }
  for (const auto& e : inequalities_) {
    os << "le";
    emit_expr(e);
  }
  for (const auto& cone : cones_) {
    os << "soc " << cone.size() << "\n";
    for (const auto& r : cone) {
      os << " row";
      emit_expr(r);
    }
  }
  return os.str();
}

}  // namespace relgrid
