#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "relgrid/conic.hpp"

namespace relgrid {

namespace {

struct Node {
  double bound;  // parent relaxation objective (lower bound)
  std::vector<std::pair<int, double>> fixes;  // (binary var, 0 or 1)
  int order;  // creation sequence, deterministic tie-break

  bool operator>(const Node& other) const {
    if (bound != other.bound) return bound > other.bound;
    // Equal bounds: explore the newest node first so that ties dive
    // depth-first toward an integral leaf instead of spreading breadth-first.
    return order < other.order;
  }
};

/// Picks the branching variable: lowest priority class first, then the most
/// fractional value, then the lowest variable index.
int pick_branching(const std::vector<std::pair<int, int>>& binaries,
                   const std::vector<double>& x, double tol) {
  int best = -1;
  int best_priority = 0;
  double best_frac = -1.0;
  for (auto [var, priority] : binaries) {
    const double f = x[var] - std::floor(x[var]);
    const double dist = std::min(f, 1.0 - f);
    if (dist <= tol) continue;
    if (best == -1 || priority < best_priority ||
        (priority == best_priority && dist > best_frac + 1e-12) ||
        (priority == best_priority && std::abs(dist - best_frac) <= 1e-12 &&
         var < best)) {
      best = var;
      best_priority = priority;
      best_frac = dist;
    }
  }
  return best;
}

}  // namespace

SolveResult solve_misocp(const ConicProgram& program, const BnbOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (program.binaries().empty()) {
    SolveResult r = solve_continuous(program, options.solver);
    r.wall_seconds = elapsed();
    return r;
  }

  // Binaries are relaxed to their boxes intersected with [0,1].
  ConicProgram relaxed = program;
  for (auto [var, priority] : program.binaries()) {
    (void)priority;
    relaxed.set_bounds(var, std::max(0.0, program.lower()[var]),
                       std::min(1.0, program.upper()[var]));
  }

  auto solve_node = [&](const std::vector<std::pair<int, double>>& fixes) {
    ConicProgram node = relaxed;
    for (auto [var, val] : fixes) node.fix(var, val);
    return solve_continuous(node, options.solver);
  };

  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  open.push({-kInfinity, {}, 0});
  int next_order = 1;
  int nodes = 0;

  SolveResult incumbent;
  incumbent.objective = kInfinity;
  bool have_incumbent = false;
  double best_bound = -kInfinity;
  SolveResult best_relaxation;  // deepest fractional solution, for repair
  bool have_relaxation = false;
  bool tried_repair = false;

  // Fix every binary to the nearest integer of the reference point and
  // resolve; a feasible result seeds the incumbent so the gap test can prune.
  auto rounding_repair = [&](const SolveResult& ref) {
    std::vector<std::pair<int, double>> fixes;
    for (auto [var, priority] : program.binaries()) {
      (void)priority;
      fixes.push_back({var, std::round(ref.x[var])});
    }
    SolveResult r = solve_node(fixes);
    if (r.status == SolveStatus::Optimal &&
        (!have_incumbent || r.objective < incumbent.objective)) {
      incumbent = r;
      have_incumbent = true;
      return true;
    }
    return false;
  };

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    best_bound = node.bound;
    if (have_incumbent &&
        (incumbent.objective - node.bound <= options.abs_gap ||
         incumbent.objective - node.bound <=
             options.rel_gap * std::max(1.0, std::abs(incumbent.objective))))
      break;
    if (++nodes > options.node_limit) break;

    SolveResult r = solve_node(node.fixes);
    if (r.status == SolveStatus::Infeasible) continue;
    if (r.status != SolveStatus::Optimal)
      throw NumericalFailure("relaxation solve failed at node " +
                             std::to_string(nodes));
    if (have_incumbent && r.objective >= incumbent.objective - options.abs_gap)
      continue;  // pruned by bound
    if (!have_relaxation || r.objective < best_relaxation.objective) {
      best_relaxation = r;
      have_relaxation = true;
    }
    const int branch_var =
        pick_branching(program.binaries(), r.x, options.integrality_tol);
    if (branch_var < 0) {
      // Integral: new incumbent.
      if (!have_incumbent || r.objective < incumbent.objective) {
        incumbent = r;
        have_incumbent = true;
      }
      continue;
    }
    for (double val : {std::floor(r.x[branch_var]), std::ceil(r.x[branch_var])}) {
      Node child{r.objective, node.fixes, next_order++};
      child.fixes.push_back({branch_var, val});
      open.push(child);
    }
    if (!have_incumbent && !tried_repair) {
      tried_repair = true;
      rounding_repair(r);
    }
  }

  if (!have_incumbent && have_relaxation) {
    if (rounding_repair(best_relaxation)) incumbent.heuristic = true;
  }
  if (!have_incumbent) {
    if (nodes > options.node_limit)
      throw NodeLimitNoIncumbent("node limit reached without an integral solution");
    throw Infeasible("no binary assignment yields a feasible program");
  }
  if (nodes > options.node_limit && !open.empty()) incumbent.heuristic = true;
  incumbent.wall_seconds = elapsed();
  return incumbent;
}

}  // namespace relgrid
