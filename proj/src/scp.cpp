#include "relgrid/scp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "relgrid/runio.hpp"

namespace relgrid {

void epigraph_reformulate(OpfProgram& prog, const Network& net,
                          const Scenario& sc) {
  if (prog.vars.reformulated)
    throw AlreadyReformulated("the program already carries epigraph auxiliaries");
  ConicProgram& p = prog.program;
  OpfVariables& ix = prog.vars;
  const int T = ix.horizon;
  const int n = net.bus_count();
  ix.sub_abs.assign(T, -1);
  ix.bus_abs.assign(T, std::vector<int>(n, -1));
  for (int t = 0; t < T; ++t) {
    ix.sub_abs[t] =
        p.add_variable("abs_p0[" + std::to_string(t) + "]", 0.0, kInfinity);
    p.add_inequality(LinExpr{{{ix.p0[t], 1.0}, {ix.sub_abs[t], -1.0}}});
    p.add_inequality(LinExpr{{{ix.p0[t], -1.0}, {ix.sub_abs[t], -1.0}}});
    for (int i = 1; i < n; ++i) {
      const int a = p.add_variable(
          "abs_inj[" + std::to_string(i) + "," + std::to_string(t) + "]", 0.0,
          kInfinity);
      ix.bus_abs[t][i] = a;
      // net injection = −p_c + p_dg − p_bc + p_bd + p_dr
      LinExpr pos{{}, -sc.load_p[t][i]};
      if (auto it = ix.dg_p.find(i); it != ix.dg_p.end()) pos.add(it->second[t], 1.0);
      if (auto it = ix.bess_c.find(i); it != ix.bess_c.end())
        pos.add(it->second[t], -1.0);
      if (auto it = ix.bess_d.find(i); it != ix.bess_d.end())
        pos.add(it->second[t], 1.0);
      if (auto it = ix.dr_p.find(i); it != ix.dr_p.end()) pos.add(it->second[t], 1.0);
      LinExpr neg = pos;
      neg.constant = -neg.constant;
      for (auto& term : neg.terms) term.second = -term.second;
      pos.add(a, -1.0);
      neg.add(a, -1.0);
      p.add_inequality(std::move(pos));  //  expr − a ≤ 0
      p.add_inequality(std::move(neg));  // −expr − a ≤ 0
    }
  }
  ix.reformulated = true;
}

AffineObjective linearize_eens(const DispatchSolution& star,
                               const ShedWeights& weights, const FailureModel& model,
                               const Network& net, const Scenario& sc,
                               const OpfVariables& vars) {
  if (!vars.reformulated)
    throw InputError("linearization requires the epigraph-reformulated program");
  AffineObjective obj;
  const int n = net.bus_count();
  for (int t = 0; t < vars.horizon; ++t) {
    const EensPoint pt = eens_point(star, net, sc, t);
    const double at = sc.ambient_temp[t];
    const double f0 = eens_cost(pt, weights, model, net, at);
    const EensGradient g = eens_gradient(pt, weights, model, net, at);
    double pivot = f0;  // f(x*) − ∇f·x*
    auto add = [&obj, &pivot](int var, double coeff, double star_value) {
      if (coeff == 0.0) return;
      obj.coeffs.push_back({var, coeff});
      pivot -= coeff * star_value;
    };
    add(vars.sub_abs[t], g.d_substation_abs, pt.substation_abs);
    for (int i = 1; i < n; ++i) {
      add(vars.bus_abs[t][i], g.d_injection[i], pt.bus[i].injection_abs);
      add(vars.l[t][i], g.d_line[i - 1], pt.line_current_sq[i - 1]);
      if (auto it = vars.dg_p.find(i); it != vars.dg_p.end())
        add(it->second[t], g.d_dg[i], pt.bus[i].dg);
      if (auto it = vars.bess_c.find(i); it != vars.bess_c.end())
        add(it->second[t], g.d_bess_charge[i], pt.bus[i].bess_charge);
      if (auto it = vars.bess_d.find(i); it != vars.bess_d.end())
        add(it->second[t], g.d_bess_discharge[i], pt.bus[i].bess_discharge);
      if (auto it = vars.dr_p.find(i); it != vars.dr_p.end())
        add(it->second[t], g.d_dr[i], pt.bus[i].dr);
    }
    obj.constant += pivot;
  }
  return obj;
}

double regularization_phi(int k, const ScpOptions& options) {
  return options.reg_scale / std::pow(options.reg_decay, k + options.reg_offset);
}

namespace {

/// Values of every program variable at a dispatch point; epigraph auxiliaries
/// are filled with the absolute values they would take when tight.
std::vector<double> target_point(const OpfVariables& ix, int var_count,
                                 const DispatchSolution& sol, const Network& net,
                                 const Scenario& sc) {
  std::vector<double> x(var_count, 0.0);
  const int n = net.bus_count();
  for (int t = 0; t < ix.horizon; ++t) {
    x[ix.p0[t]] = sol.p0[t];
    x[ix.q0[t]] = sol.q0[t];
    x[ix.v0[t]] = sol.v0[t];
    for (int i = 1; i < n; ++i) {
      x[ix.fp[t][i]] = sol.fp[t][i];
      x[ix.fq[t][i]] = sol.fq[t][i];
      x[ix.l[t][i]] = sol.l[t][i];
      x[ix.v[t][i]] = sol.v[t][i];
    }
    if (ix.reformulated) {
      x[ix.sub_abs[t]] =
          !sol.sub_abs.empty() ? sol.sub_abs[t] : std::abs(sol.p0[t]);
      for (int i = 1; i < n; ++i)
        x[ix.bus_abs[t][i]] = !sol.bus_abs.empty()
                                  ? sol.bus_abs[t][i]
                                  : std::abs(net_injection(sol, net, sc, i, t));
    }
  }
  auto copy_group = [&x](const std::map<int, std::vector<int>>& idx,
                         const std::map<int, std::vector<double>>& val) {
    for (const auto& [b, cols] : idx)
      for (size_t t = 0; t < cols.size(); ++t) x[cols[t]] = val.at(b)[t];
  };
  copy_group(ix.dg_p, sol.dg_p);
  copy_group(ix.dg_q, sol.dg_q);
  copy_group(ix.bess_c, sol.bess_c);
  copy_group(ix.bess_d, sol.bess_d);
  copy_group(ix.bess_soc, sol.bess_soc);
  copy_group(ix.bess_u, sol.bess_u);
  copy_group(ix.dr_p, sol.dr_p);
  copy_group(ix.dr_q, sol.dr_q);
  copy_group(ix.dr_u, sol.dr_u);
  return x;
}

bool is_binary_var(const OpfVariables& ix, int var) {
  for (const auto& [b, cols] : ix.bess_u)
    if (std::find(cols.begin(), cols.end(), var) != cols.end()) return true;
  for (const auto& [b, cols] : ix.dr_u)
    if (std::find(cols.begin(), cols.end(), var) != cols.end()) return true;
  return false;
}

/// Binary values carried into the convex iterations. Gates the cost-optimal
/// dispatch leaves slack (both sides at zero) are opened toward redispatch
/// headroom: demand response enabled everywhere, storage set to charge in the
/// low-load half of the horizon and discharge in the high-load half.
void select_binaries(const DispatchSolution& cm, const Network& net,
                     const Scenario& sc, std::map<int, std::vector<double>>& u_bess,
                     std::map<int, std::vector<double>>& u_dr) {
  const int T = cm.horizon;
  std::vector<double> total_load(T, 0.0);
  for (int t = 0; t < T; ++t)
    total_load[t] = std::accumulate(sc.load_p[t].begin(), sc.load_p[t].end(), 0.0);
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&total_load](int a, int b) { return total_load[a] < total_load[b]; });
  std::vector<bool> low_half(T, false);
  for (int r = 0; r < T / 2; ++r) low_half[order[r]] = true;
  (void)net;
  for (const auto& [bus, vals] : cm.bess_u) {
    auto& u = u_bess[bus];
    u.assign(T, 0.0);
    for (int t = 0; t < T; ++t) {
      const double pc = cm.bess_c.at(bus)[t], pd = cm.bess_d.at(bus)[t];
      if (pc > 1e-7)
        u[t] = 1.0;
      else if (pd > 1e-7)
        u[t] = 0.0;
      else
        u[t] = low_half[t] ? 1.0 : 0.0;
    }
  }
  for (const auto& [bus, vals] : cm.dr_u) {
    auto& u = u_dr[bus];
    u.assign(T, 1.0);
  }
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

std::pair<DispatchSolution, ScpTrace> solve_crm(const Network& net,
                                                const Scenario& sc,
                                                const FailureModel& model,
                                                const ScpOptions& options) {
  model.require_coverage(net);
  ScpTrace trace;
  const auto tic = [] { return std::chrono::steady_clock::now(); };
  auto seconds_since = [](auto t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  // Step 0: cost-minimization program.
  auto t0 = tic();
  OpfProgram cm_prog = build_cm(net, sc);
  SolveResult cm_res = solve_misocp(cm_prog.program, options.bnb);
  if (cm_res.status != SolveStatus::Optimal)
    throw SubproblemInfeasible("cost-minimization stage did not solve");
  DispatchSolution incumbent = extract_solution(cm_prog.vars, cm_res.x, net);
  const double cm_obj = operational_cost(incumbent, sc);
  double incumbent_crm = cm_obj + eens_total(incumbent, net, sc, model);

  ScpIteration row0;
  row0.k = 0;
  row0.obj_cm = cm_obj;
  row0.obj_crm = cm_obj + eens_total(incumbent, net, sc, model);
  row0.obj_crm_appx = row0.obj_crm;  // the model is exact at its own expansion point
  row0.seconds = seconds_since(t0);
  trace.iterations.push_back(row0);

  std::map<int, std::vector<double>> u_bess, u_dr;
  select_binaries(incumbent, net, sc, u_bess, u_dr);

  DispatchSolution prev = incumbent;
  double prev_crm = row0.obj_crm;
  double prev_cm = row0.obj_cm;
  double prev_appx = row0.obj_crm_appx;

  for (int k = 1; k <= options.k_max; ++k) {
    auto tk = tic();
    OpfProgram prog = build_cm(net, sc);
    epigraph_reformulate(prog, net, sc);
    if (!options.refine_binaries) {
      for (const auto& [bus, cols] : prog.vars.bess_u)
        for (int t = 0; t < prog.vars.horizon; ++t)
          prog.program.fix(cols[t], u_bess.at(bus)[t]);
      for (const auto& [bus, cols] : prog.vars.dr_u)
        for (int t = 0; t < prog.vars.horizon; ++t)
          prog.program.fix(cols[t], u_dr.at(bus)[t]);
    }
    const AffineObjective lin =
        linearize_eens(prev, sc.weights, model, net, sc, prog.vars);
    for (auto [var, coeff] : lin.coeffs) prog.program.add_objective_linear(var, coeff);
    prog.program.add_objective_constant(lin.constant);

    const std::vector<double> star = target_point(
        prog.vars, prog.program.variable_count(), prev, net, sc);
    const double phi = regularization_phi(k, options);
    for (int j = 0; j < prog.program.variable_count(); ++j) {
      if (prog.program.lower()[j] == prog.program.upper()[j]) continue;
      if (is_binary_var(prog.vars, j) && !options.refine_binaries) continue;
      prog.program.add_objective_quadratic(j, phi);
      prog.program.add_objective_linear(j, -2.0 * phi * star[j]);
      prog.program.add_objective_constant(phi * star[j] * star[j]);
    }

    SolveResult res = options.refine_binaries
                          ? solve_misocp(prog.program, options.bnb)
                          : solve_continuous(prog.program, options.bnb.solver);
    if (res.status != SolveStatus::Optimal)
      throw SubproblemInfeasible("iterate " + std::to_string(k) +
                                 " subproblem did not solve (status " +
                                 std::to_string(static_cast<int>(res.status)) + ")");
    DispatchSolution sol = extract_solution(prog.vars, res.x, net);

    ScpIteration row;
    row.k = k;
    row.obj_cm = operational_cost(sol, sc);
    row.obj_crm = row.obj_cm + eens_total(sol, net, sc, model);
    row.obj_crm_appx = row.obj_cm + lin.value_at(res.x);
    const std::vector<double> xk = target_point(
        prog.vars, prog.program.variable_count(), sol, net, sc);
    row.metric1 = squared_distance(xk, star);
    row.metric2 = std::abs((row.obj_crm_appx - row.obj_cm) - (prev_crm - prev_cm));
    row.metric3 = std::abs(row.obj_crm_appx - prev_appx) /
                  std::max(std::abs(row.obj_crm_appx), 1e-300);
    row.seconds = seconds_since(tk);
    trace.iterations.push_back(row);

    // keep the iterate with the best exact combined objective (the linearized
    // subproblem optimum can be slightly worse under the exact model)
    if (row.obj_crm < incumbent_crm) {
      incumbent_crm = row.obj_crm;
      incumbent = sol;
    }
    prev = sol;
    prev_crm = row.obj_crm;
    prev_cm = row.obj_cm;
    prev_appx = row.obj_crm_appx;

    if (row.metric1 <= options.eps1) {
      trace.criterion = 1;
      trace.termination = "variable displacement below eps1";
      break;
    }
    if (row.metric2 <= options.eps2) {
      trace.criterion = 2;
      trace.termination = "linearization deviation below eps2";
      break;
    }
    if (row.metric3 <= options.eps3) {
      trace.criterion = 3;
      trace.termination = "relative objective improvement below eps3";
      break;
    }
  }
  if (trace.criterion == 0) {
    trace.termination = "iteration cap reached";
    trace.hit_iteration_limit = true;
  }
  return {incumbent, trace};
}

void write_trace_csv(const std::string& path, const ScpTrace& trace) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& it : trace.iterations) {
    rows.push_back({std::to_string(it.k), format_number(it.obj_cm),
                    format_number(it.obj_crm), format_number(it.obj_crm_appx),
                    format_number(it.metric1), format_number(it.metric2),
                    format_number(it.metric3), format_number(it.seconds, 6)});
  }
  write_csv(path,
            {"iteration", "obj_cm", "obj_crm", "obj_crm_appx", "metric1", "metric2",
             "metric3", "seconds"},
            rows);
}

}  // namespace relgrid
