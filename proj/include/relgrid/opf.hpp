#pragma once

#include <map>
#include <string>
#include <vector>

#include "relgrid/conic.hpp"
#include "relgrid/grid.hpp"
#include "relgrid/reliability.hpp"
#include "relgrid/scenario.hpp"

namespace relgrid {

/// Program variable indices of the dispatch model, [t][bus] unless noted.
/// Entries for bus 0 of line-indexed vectors are unused (-1).
struct OpfVariables {
  int horizon = 0;
  std::vector<std::vector<int>> fp, fq, l, v;
  std::vector<int> p0, q0, v0;
  std::map<int, std::vector<int>> dg_p, dg_q;                      // by DG bus
  std::map<int, std::vector<int>> bess_c, bess_d, bess_soc, bess_u;
  std::map<int, std::vector<int>> dr_p, dr_q, dr_u;
  // Epigraph auxiliaries, present after reformulation only:
  std::vector<int> sub_abs;               // |p0| per t
  std::vector<std::vector<int>> bus_abs;  // |net injection| per [t][bus]
  bool reformulated = false;
};

struct OpfProgram {
  ConicProgram program;
  OpfVariables vars;
};

/// Dispatch values in the same layout as OpfVariables.
struct DispatchSolution {
  int horizon = 0;
  std::vector<std::vector<double>> fp, fq, l, v;
  std::vector<double> p0, q0, v0;
  std::map<int, std::vector<double>> dg_p, dg_q;
  std::map<int, std::vector<double>> bess_c, bess_d, bess_soc, bess_u;
  std::map<int, std::vector<double>> dr_p, dr_q, dr_u;
  std::vector<double> sub_abs;
  std::vector<std::vector<double>> bus_abs;
};

/// Assembles the day-ahead cost-minimization conic program: flow-limit and
/// current-voltage cones, voltage-drop and nodal-balance equalities, DER box
/// constraints with temperature-derated limits, BESS state-of-charge
/// recursion, gating binaries, and the linear energy-cost objective.
OpfProgram build_cm(const Network& net, const Scenario& scenario);

DispatchSolution extract_solution(const OpfVariables& vars,
                                  const std::vector<double>& x, const Network& net);

/// Energy cost Σ_t (c0·p0 + c_dg·Σp_dg + c_bc·Σp_bc + c_bd·Σp_bd + c_dr·Σp_dr).
double operational_cost(const DispatchSolution& sol, const Scenario& scenario);

/// Net injection −p_c + p_dg − p_bc + p_bd + p_dr at (bus, t).
double net_injection(const DispatchSolution& sol, const Network& net,
                     const Scenario& scenario, int bus, int t);

/// Operating point of one time step for the expected-failure-cost model.
EensPoint eens_point(const DispatchSolution& sol, const Network& net,
                     const Scenario& scenario, int t);

/// Expected failure cost summed over the horizon, evaluated exactly.
double eens_total(const DispatchSolution& sol, const Network& net,
                  const Scenario& scenario, const FailureModel& model);

struct Violation {
  std::string constraint;
  int bus = -1;
  int t = -1;
  double residual = 0.0;
};

/// Per-constraint residual audit; empty iff every residual is within tol.
/// Also reports the conic-relaxation tightness gap l·v − (f_p²+f_q²).
std::vector<Violation> feasibility_report(const DispatchSolution& sol,
                                          const Network& net,
                                          const Scenario& scenario, double tol);

std::string solution_to_json(const DispatchSolution& sol, const Network& net);
/// Writes component × time CSV matrices (one file per quantity) into dir.
void solution_to_csv(const std::string& dir, const DispatchSolution& sol,
                     const Network& net);

}  // namespace relgrid
