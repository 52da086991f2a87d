#include "relgrid/opf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "relgrid/runio.hpp"

namespace relgrid {

using nlohmann::json;

OpfProgram build_cm(const Network& net, const Scenario& sc) {
  sc.validate(net);
  const int n = net.bus_count();
  const int T = sc.horizon();
  OpfProgram out;
  ConicProgram& p = out.program;
  OpfVariables& ix = out.vars;
  ix.horizon = T;
  ix.fp.assign(T, std::vector<int>(n, -1));
  ix.fq.assign(T, std::vector<int>(n, -1));
  ix.l.assign(T, std::vector<int>(n, -1));
  ix.v.assign(T, std::vector<int>(n, -1));
  ix.p0.assign(T, -1);
  ix.q0.assign(T, -1);
  ix.v0.assign(T, -1);

  const BusParams& sub = net.bus(0);
  auto name = [](const char* base, int bus, int t) {
    return std::string(base) + "[" + std::to_string(bus) + "," + std::to_string(t) + "]";
  };

  for (int t = 0; t < T; ++t) {
    ix.v0[t] = p.add_variable(name("v", 0, t), sub.substation_voltage_sq,
                              sub.substation_voltage_sq);
    const double pcap = sub.substation_p_max;
    const double qcap = sub.substation_q_max;
    ix.p0[t] = p.add_variable(name("p0", 0, t),
                              pcap >= BusParams::kInf ? -kInfinity : -pcap,
                              pcap >= BusParams::kInf ? kInfinity : pcap);
    ix.q0[t] = p.add_variable(name("q0", 0, t),
                              qcap >= BusParams::kInf ? -kInfinity : -qcap,
                              qcap >= BusParams::kInf ? kInfinity : qcap);
    for (int i = 1; i < n; ++i) {
      const BusParams& b = net.bus(i);
      ix.fp[t][i] = p.add_variable(name("fp", i, t));
      ix.fq[t][i] = p.add_variable(name("fq", i, t));
      ix.l[t][i] = p.add_variable(name("l", i, t), 0.0);
      ix.v[t][i] = p.add_variable(name("v", i, t), b.voltage_sq_min, b.voltage_sq_max);
    }
  }
  for (const auto& [bus, dg] : net.ders().dg) {
    auto& vp = ix.dg_p[bus];
    auto& vq = ix.dg_q[bus];
    for (int t = 0; t < T; ++t) {
      vp.push_back(p.add_variable(name("p_dg", bus, t), dg.p_min,
                                  dg.p_max * sc.derate[t].dg));
      vq.push_back(p.add_variable(name("q_dg", bus, t), dg.q_min, dg.q_max));
    }
  }
  for (const auto& [bus, bess] : net.ders().bess) {
    auto& vc = ix.bess_c[bus];
    auto& vd = ix.bess_d[bus];
    auto& vs = ix.bess_soc[bus];
    auto& vu = ix.bess_u[bus];
    for (int t = 0; t < T; ++t) {
      vc.push_back(p.add_variable(name("p_bc", bus, t), 0.0, bess.p_max));
      vd.push_back(p.add_variable(name("p_bd", bus, t), 0.0, bess.p_max));
      vs.push_back(p.add_variable(name("soc", bus, t), bess.soc_min, bess.soc_max));
      vu.push_back(p.add_variable(name("u_bess", bus, t), 0.0, 1.0));
      p.mark_binary(vu.back(), /*priority=*/0);
    }
  }
  for (const auto& [bus, dr] : net.ders().dr) {
    auto& vp = ix.dr_p[bus];
    auto& vq = ix.dr_q[bus];
    auto& vu = ix.dr_u[bus];
    for (int t = 0; t < T; ++t) {
      vp.push_back(p.add_variable(name("p_dr", bus, t), 0.0, dr.p_max));
      vq.push_back(p.add_variable(name("q_dr", bus, t), dr.q_min < 0 ? dr.q_min : 0.0,
                                  dr.q_max));
      vu.push_back(p.add_variable(name("u_dr", bus, t), 0.0, 1.0));
      p.mark_binary(vu.back(), /*priority=*/1);
      // gating: p ≤ P_max·u, p ≥ P_min·u, q ≤ Q_max·u
      p.add_inequality(LinExpr{{{vp.back(), 1.0}, {vu.back(), -dr.p_max}}});
      if (dr.p_min > 0)
        p.add_inequality(LinExpr{{{vp.back(), -1.0}, {vu.back(), dr.p_min}}});
      p.add_inequality(LinExpr{{{vq.back(), 1.0}, {vu.back(), -dr.q_max}}});
    }
  }
  // BESS gating and state-of-charge recursion.
  for (const auto& [bus, bess] : net.ders().bess) {
    const auto& vc = ix.bess_c[bus];
    const auto& vd = ix.bess_d[bus];
    const auto& vs = ix.bess_soc[bus];
    const auto& vu = ix.bess_u[bus];
    for (int t = 0; t < T; ++t) {
      p.add_inequality(LinExpr{{{vc[t], 1.0}, {vu[t], -bess.p_max}}});
      p.add_inequality(LinExpr{{{vd[t], 1.0}, {vu[t], bess.p_max}}, -bess.p_max});
      const double denom = bess.p_max * sc.derate[t].bess;
      LinExpr rec{{{vs[t], 1.0},
                   {vc[t], -bess.eta_c / denom},
                   {vd[t], 1.0 / (bess.eta_d * denom)}}};
      if (t == 0) {
        rec.constant = -(1.0 - bess.self_discharge) * bess.soc_init;
      } else {
        rec.add(vs[t - 1], -(1.0 - bess.self_discharge));
      }
      p.add_equality(std::move(rec));
    }
  }

  // Network constraints per step.
  for (int t = 0; t < T; ++t) {
    const double line_factor = sc.derate[t].line;
    for (int i = 1; i < n; ++i) {
      const LineParams& ln = net.line(i);
      const double cap = std::sqrt(line_factor) * ln.apparent_limit;
      // receiving-end and sending-end apparent-power limits
      p.add_soc({LinExpr{{}, cap},
                 LinExpr{{{ix.fp[t][i], 1.0}}},
                 LinExpr{{{ix.fq[t][i], 1.0}}}});
      p.add_soc({LinExpr{{}, cap},
                 LinExpr{{{ix.fp[t][i], 1.0}, {ix.l[t][i], ln.resistance}}},
                 LinExpr{{{ix.fq[t][i], 1.0}, {ix.l[t][i], ln.reactance}}}});
      // voltage drop along the line
      const int up = ln.upstream;
      const int vup = up == 0 ? ix.v0[t] : ix.v[t][up];
      p.add_equality(LinExpr{{{ix.v[t][i], 1.0},
                              {ix.fp[t][i], 2.0 * ln.resistance},
                              {ix.fq[t][i], 2.0 * ln.reactance},
                              {ix.l[t][i],
                               ln.resistance * ln.resistance +
                                   ln.reactance * ln.reactance},
                              {vup, -1.0}}});
      // current-voltage coupling f_p² + f_q² ≤ l·v
      p.add_rotated_soc(LinExpr{{{ix.l[t][i], 1.0}}},
                        LinExpr{{{ix.v[t][i], 1.0}}},
                        {LinExpr{{{ix.fp[t][i], 1.0}}},
                         LinExpr{{{ix.fq[t][i], 1.0}}}});
    }
    // Nodal balances. For bus i: f_i = Σ_children(f_j + l_j·R_j) + load −
    // injections + shunt·v; for the substation, p0 plays the role of f.
    for (int i = 0; i < n; ++i) {
      const BusParams& b = net.bus(i);
      LinExpr bp, bq;
      if (i == 0) {
        bp.add(ix.p0[t], -1.0);
        bq.add(ix.q0[t], -1.0);
        bp.add(ix.v0[t], b.shunt_g);
        bq.add(ix.v0[t], b.shunt_b);
      } else {
        bp.add(ix.fp[t][i], -1.0);
        bq.add(ix.fq[t][i], -1.0);
        bp.add(ix.v[t][i], b.shunt_g);
        bq.add(ix.v[t][i], b.shunt_b);
        bp.constant += sc.load_p[t][i];
        bq.constant += sc.load_q[t][i];
      }
      for (int j : net.children(i)) {
        const LineParams& lj = net.line(j);
        bp.add(ix.fp[t][j], 1.0);
        bp.add(ix.l[t][j], lj.resistance);
        bq.add(ix.fq[t][j], 1.0);
        bq.add(ix.l[t][j], lj.reactance);
      }
      if (auto it = ix.dg_p.find(i); it != ix.dg_p.end()) {
        bp.add(it->second[t], -1.0);
        bq.add(ix.dg_q[i][t], -1.0);
      }
      if (auto it = ix.bess_c.find(i); it != ix.bess_c.end()) {
        bp.add(it->second[t], 1.0);
        bp.add(ix.bess_d[i][t], -1.0);
      }
      if (auto it = ix.dr_p.find(i); it != ix.dr_p.end()) {
        bp.add(it->second[t], -1.0);
        bq.add(ix.dr_q[i][t], -1.0);
      }
      p.add_equality(std::move(bp));
      p.add_equality(std::move(bq));
    }
    // Objective: energy purchase plus DER dispatch prices.
    const Prices& c = sc.prices[t];
    p.add_objective_linear(ix.p0[t], c.substation);
    for (const auto& [bus, vars] : ix.dg_p) p.add_objective_linear(vars[t], c.dg);
    for (const auto& [bus, vars] : ix.bess_c)
      p.add_objective_linear(vars[t], c.bess_charge);
    for (const auto& [bus, vars] : ix.bess_d)
      p.add_objective_linear(vars[t], c.bess_discharge);
    for (const auto& [bus, vars] : ix.dr_p) p.add_objective_linear(vars[t], c.dr);
  }
  return out;
}

namespace {

std::vector<double> pick(const std::vector<int>& idx, const std::vector<double>& x) {
  std::vector<double> out(idx.size(), 0.0);
  for (size_t i = 0; i < idx.size(); ++i) out[i] = idx[i] >= 0 ? x[idx[i]] : 0.0;
  return out;
}

}  // namespace

DispatchSolution extract_solution(const OpfVariables& vars,
                                  const std::vector<double>& x, const Network& net) {
  DispatchSolution s;
  s.horizon = vars.horizon;
  const int T = vars.horizon;
  s.fp.resize(T);
  s.fq.resize(T);
  s.l.resize(T);
  s.v.resize(T);
  for (int t = 0; t < T; ++t) {
    s.fp[t] = pick(vars.fp[t], x);
    s.fq[t] = pick(vars.fq[t], x);
    s.l[t] = pick(vars.l[t], x);
    s.v[t] = pick(vars.v[t], x);
  }
  s.p0 = pick(vars.p0, x);
  s.q0 = pick(vars.q0, x);
  s.v0 = pick(vars.v0, x);
  for (const auto& [b, idx] : vars.dg_p) s.dg_p[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.dg_q) s.dg_q[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.bess_c) s.bess_c[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.bess_d) s.bess_d[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.bess_soc) s.bess_soc[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.bess_u) s.bess_u[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.dr_p) s.dr_p[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.dr_q) s.dr_q[b] = pick(idx, x);
  for (const auto& [b, idx] : vars.dr_u) s.dr_u[b] = pick(idx, x);
  if (vars.reformulated) {
    s.sub_abs = pick(vars.sub_abs, x);
    s.bus_abs.resize(T);
    for (int t = 0; t < T; ++t) s.bus_abs[t] = pick(vars.bus_abs[t], x);
  }
  (void)net;
  return s;
}

double operational_cost(const DispatchSolution& sol, const Scenario& sc) {
  if (sol.horizon != sc.horizon())
    throw DimensionMismatch("solution horizon does not match the scenario");
  double cost = 0.0;
  for (int t = 0; t < sol.horizon; ++t) {
    const Prices& c = sc.prices[t];
    cost += c.substation * sol.p0[t];
    for (const auto& [b, v] : sol.dg_p) cost += c.dg * v[t];
    for (const auto& [b, v] : sol.bess_c) cost += c.bess_charge * v[t];
    for (const auto& [b, v] : sol.bess_d) cost += c.bess_discharge * v[t];
    for (const auto& [b, v] : sol.dr_p) cost += c.dr * v[t];
  }
  return cost;
}

double net_injection(const DispatchSolution& sol, const Network& net,
                     const Scenario& sc, int bus, int t) {
  (void)net;
  double inj = -sc.load_p[t][bus];
  if (auto it = sol.dg_p.find(bus); it != sol.dg_p.end()) inj += it->second[t];
  if (auto it = sol.bess_c.find(bus); it != sol.bess_c.end()) inj -= it->second[t];
  if (auto it = sol.bess_d.find(bus); it != sol.bess_d.end()) inj += it->second[t];
  if (auto it = sol.dr_p.find(bus); it != sol.dr_p.end()) inj += it->second[t];
  return inj;
}

EensPoint eens_point(const DispatchSolution& sol, const Network& net,
                     const Scenario& sc, int t) {
  const int n = net.bus_count();
  EensPoint pt;
  pt.substation_abs = std::abs(sol.p0[t]);
  pt.bus.resize(n);
  pt.line_current_sq.assign(n - 1, 0.0);
  for (int i = 1; i < n; ++i) {
    BusExposure& e = pt.bus[i];
    e.consumption = sc.load_p[t][i];
    if (auto it = sol.dg_p.find(i); it != sol.dg_p.end()) e.dg = it->second[t];
    if (auto it = sol.bess_c.find(i); it != sol.bess_c.end())
      e.bess_charge = it->second[t];
    if (auto it = sol.bess_d.find(i); it != sol.bess_d.end())
      e.bess_discharge = it->second[t];
    if (auto it = sol.dr_p.find(i); it != sol.dr_p.end()) e.dr = it->second[t];
    e.injection_abs = std::abs(net_injection(sol, net, sc, i, t));
    pt.line_current_sq[i - 1] = sol.l[t][i];
  }
  return pt;
}

double eens_total(const DispatchSolution& sol, const Network& net,
                  const Scenario& sc, const FailureModel& model) {
  double total = 0.0;
  for (int t = 0; t < sol.horizon; ++t)
    total += eens_cost(eens_point(sol, net, sc, t), sc.weights, model, net,
                       sc.ambient_temp[t]);
  return total;
}

std::vector<Violation> feasibility_report(const DispatchSolution& sol,
                                          const Network& net, const Scenario& sc,
                                          double tol) {
  std::vector<Violation> out;
  const int n = net.bus_count();
  const int T = sol.horizon;
  auto flag = [&out, tol](const std::string& c, int bus, int t, double residual) {
    if (residual > tol) out.push_back({c, bus, t, residual});
  };
  for (int t = 0; t < T; ++t) {
    const double lf = sc.derate[t].line;
    for (int i = 1; i < n; ++i) {
      const LineParams& ln = net.line(i);
      const double fp = sol.fp[t][i], fq = sol.fq[t][i], l = sol.l[t][i],
                   v = sol.v[t][i];
      const double cap2 = lf * ln.apparent_limit * ln.apparent_limit;
      flag("flow_limit_receiving", i, t, fp * fp + fq * fq - cap2);
      const double sp = fp + l * ln.resistance, sq = fq + l * ln.reactance;
      flag("flow_limit_sending", i, t, sp * sp + sq * sq - cap2);
      const double vup = ln.upstream == 0 ? sol.v0[t] : sol.v[t][ln.upstream];
      flag("voltage_drop", i, t,
           std::abs(v + 2.0 * (ln.resistance * fp + ln.reactance * fq) +
                    l * (ln.resistance * ln.resistance +
                         ln.reactance * ln.reactance) -
                    vup));
      flag("current_voltage_cone", i, t, fp * fp + fq * fq - l * v);
      flag("current_nonneg", i, t, -l);
      flag("voltage_upper", i, t, v - net.bus(i).voltage_sq_max);
      flag("voltage_lower", i, t, net.bus(i).voltage_sq_min - v);
    }
    for (int i = 0; i < n; ++i) {
      const BusParams& b = net.bus(i);
      double bp, bq;
      if (i == 0) {
        bp = -sol.p0[t] + b.shunt_g * sol.v0[t];
        bq = -sol.q0[t] + b.shunt_b * sol.v0[t];
      } else {
        bp = -sol.fp[t][i] + sc.load_p[t][i] + b.shunt_g * sol.v[t][i];
        bq = -sol.fq[t][i] + sc.load_q[t][i] + b.shunt_b * sol.v[t][i];
      }
      for (int j : net.children(i)) {
        bp += sol.fp[t][j] + sol.l[t][j] * net.line(j).resistance;
        bq += sol.fq[t][j] + sol.l[t][j] * net.line(j).reactance;
      }
      if (auto it = sol.dg_p.find(i); it != sol.dg_p.end()) {
        bp -= it->second[t];
        bq -= sol.dg_q.at(i)[t];
      }
      if (auto it = sol.bess_c.find(i); it != sol.bess_c.end()) {
        bp += it->second[t];
        bp -= sol.bess_d.at(i)[t];
      }
      if (auto it = sol.dr_p.find(i); it != sol.dr_p.end()) {
        bp -= it->second[t];
        bq -= sol.dr_q.at(i)[t];
      }
      flag("balance_p", i, t, std::abs(bp));
      flag("balance_q", i, t, std::abs(bq));
    }
    for (const auto& [bus, bess] : net.ders().bess) {
      const double pc = sol.bess_c.at(bus)[t], pd = sol.bess_d.at(bus)[t],
                   u = sol.bess_u.at(bus)[t];
      flag("bess_charge_gate", bus, t, pc - bess.p_max * u);
      flag("bess_discharge_gate", bus, t, pd - bess.p_max * (1.0 - u));
      const double denom = bess.p_max * sc.derate[t].bess;
      const double prev = t == 0 ? bess.soc_init : sol.bess_soc.at(bus)[t - 1];
      flag("soc_recursion", bus, t,
           std::abs(sol.bess_soc.at(bus)[t] -
                    (1.0 - bess.self_discharge) * prev -
                    pc * bess.eta_c / denom + pd / (bess.eta_d * denom)));
      flag("binary_integrality", bus, t, std::min(u, 1.0 - u));
    }
    for (const auto& [bus, dr] : net.ders().dr) {
      const double pd = sol.dr_p.at(bus)[t], u = sol.dr_u.at(bus)[t];
      flag("dr_gate", bus, t, pd - dr.p_max * u);
      flag("binary_integrality", bus, t, std::min(u, 1.0 - u));
    }
  }
  return out;
}

namespace {

json series_json(const std::vector<double>& v) { return json(v); }

}  // namespace

std::string solution_to_json(const DispatchSolution& sol, const Network& net) {
  (void)net;
  json doc;
  doc["horizon"] = sol.horizon;
  doc["p0"] = series_json(sol.p0);
  doc["q0"] = series_json(sol.q0);
  doc["v0"] = series_json(sol.v0);
  auto matrix = [](const std::vector<std::vector<double>>& m) { return json(m); };
  doc["fp"] = matrix(sol.fp);
  doc["fq"] = matrix(sol.fq);
  doc["l"] = matrix(sol.l);
  doc["v"] = matrix(sol.v);
  auto group = [](const std::map<int, std::vector<double>>& m) {
    json g = json::object();
    for (const auto& [b, v] : m) g[std::to_string(b)] = v;
    return g;
  };
  doc["dg_p"] = group(sol.dg_p);
  doc["dg_q"] = group(sol.dg_q);
  doc["bess_charge"] = group(sol.bess_c);
  doc["bess_discharge"] = group(sol.bess_d);
  doc["bess_soc"] = group(sol.bess_soc);
  doc["bess_u"] = group(sol.bess_u);
  doc["dr_p"] = group(sol.dr_p);
  doc["dr_q"] = group(sol.dr_q);
  doc["dr_u"] = group(sol.dr_u);
  if (!sol.sub_abs.empty()) {
    doc["sub_abs"] = series_json(sol.sub_abs);
    doc["bus_abs"] = matrix(sol.bus_abs);
  }
  return doc.dump(2);
}

void solution_to_csv(const std::string& dir, const DispatchSolution& sol,
                     const Network& net) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const int T = sol.horizon;
  std::vector<std::string> header{"component"};
  for (int t = 0; t < T; ++t) header.push_back("t" + std::to_string(t));
  auto write_matrix = [&](const std::string& file,
                          const std::vector<std::vector<double>>& by_t,
                          int first_bus) {
    std::vector<std::vector<std::string>> rows;
    for (int i = first_bus; i < net.bus_count(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (int t = 0; t < T; ++t) row.push_back(format_number(by_t[t][i]));
      rows.push_back(std::move(row));
    }
    write_csv((fs::path(dir) / file).string(), header, rows);
  };
  write_matrix("flow_p.csv", sol.fp, 1);
  write_matrix("flow_q.csv", sol.fq, 1);
  write_matrix("current_sq.csv", sol.l, 1);
  write_matrix("voltage_sq.csv", sol.v, 1);
  auto write_group = [&](const std::string& file,
                         const std::map<int, std::vector<double>>& m) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [b, v] : m) {
      std::vector<std::string> row{std::to_string(b)};
      for (int t = 0; t < T; ++t) row.push_back(format_number(v[t]));
      rows.push_back(std::move(row));
    }
    write_csv((fs::path(dir) / file).string(), header, rows);
  };
  write_group("dg_p.csv", sol.dg_p);
  write_group("dg_q.csv", sol.dg_q);
  write_group("bess_charge.csv", sol.bess_c);
  write_group("bess_discharge.csv", sol.bess_d);
  write_group("bess_soc.csv", sol.bess_soc);
  write_group("dr_p.csv", sol.dr_p);
  {
    std::vector<std::vector<std::string>> rows(3);
    rows[0].push_back("p0");
    rows[1].push_back("q0");
    rows[2].push_back("v0");
    for (int t = 0; t < T; ++t) {
      rows[0].push_back(format_number(sol.p0[t]));
      rows[1].push_back(format_number(sol.q0[t]));
      rows[2].push_back(format_number(sol.v0[t]));
    }
    write_csv((fs::path(dir) / "substation.csv").string(), header, rows);
  }
}

}  // namespace relgrid
