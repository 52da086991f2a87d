#pragma once

#include <string>
#include <utility>
#include <vector>

#include "relgrid/opf.hpp"

namespace relgrid {

struct ScpOptions {
  double eps1 = 1e-3;   // squared iterate displacement
  double eps2 = 1e-1;   // linearization deviation
  double eps3 = 2e-5;   // relative objective improvement
  int k_max = 100;
  double reg_scale = 1e5;
  double reg_decay = 0.85;
  int reg_offset = 5;
  bool refine_binaries = false;  // re-open binaries every iteration
  BnbOptions bnb;
};

struct ScpIteration {
  int k = 0;
  double obj_cm = 0.0;        // energy-cost component at the iterate
  double obj_crm = 0.0;       // energy cost + exact expected failure cost
  double obj_crm_appx = 0.0;  // energy cost + linearized expected failure cost
  double metric1 = 0.0;
  double metric2 = 0.0;
  double metric3 = 0.0;
  double seconds = 0.0;
};

struct ScpTrace {
  std::vector<ScpIteration> iterations;  // [0] holds the CM starting point
  int criterion = 0;  // 1..3, or 0 when the iteration cap stopped the loop
  std::string termination;
  bool hit_iteration_limit = false;
};

/// Adds the absolute-value epigraph auxiliaries: one variable ≥ |p0| per step
/// and one ≥ |net injection| per (bus, step). Throws AlreadyReformulated on a
/// second call.
void epigraph_reformulate(OpfProgram& prog, const Network& net,
                          const Scenario& scenario);

struct AffineObjective {
  double constant = 0.0;
  std::vector<std::pair<int, double>> coeffs;  // program variable, coefficient

  double value_at(const std::vector<double>& x) const {
    double v = constant;
    for (auto [j, c] : coeffs) v += c * x[j];
    return v;
  }
};

/// First-order model of the horizon expected failure cost around `star`,
/// expressed over the variables of `vars` (which must be reformulated).
AffineObjective linearize_eens(const DispatchSolution& star,
                               const ShedWeights& weights, const FailureModel& model,
                               const Network& net, const Scenario& scenario,
                               const OpfVariables& vars);

/// Proximal weight φ(k) = reg_scale / reg_decay^{k + reg_offset}.
double regularization_phi(int k, const ScpOptions& options);

/// Sequential convex loop: solve the cost-minimization program, then iterate
/// linearize → regularize → resolve until one of the three convergence
/// criteria fires (checked in order) or k_max is reached.
std::pair<DispatchSolution, ScpTrace> solve_crm(const Network& net,
                                                const Scenario& scenario,
                                                const FailureModel& model,
                                                const ScpOptions& options = {});

void write_trace_csv(const std::string& path, const ScpTrace& trace);

}  // namespace relgrid
