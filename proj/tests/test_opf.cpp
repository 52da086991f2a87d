#include <cmath>

#include <doctest.h>

#include "relgrid/conic.hpp"
#include "relgrid/grid.hpp"
#include "relgrid/opf.hpp"
#include "relgrid/scenario.hpp"

using namespace relgrid;

namespace {

std::vector<BusParams> make_buses(int n) {
  std::vector<BusParams> buses(n);
  for (int i = 0; i < n; ++i) {
    buses[i].id = i;
    buses[i].voltage_sq_min = 0.81;
    buses[i].voltage_sq_max = 1.21;
  }
  buses[0].is_substation = true;
  buses[0].substation_voltage_sq = 1.0;
  return buses;
}

LineParams line(int from, int to, double r, double x, double s = 10.0) {
  LineParams ln;
  ln.upstream = from;
  ln.id = to;
  ln.resistance = r;
  ln.reactance = x;
  ln.apparent_limit = s;
  return ln;
}

Scenario flat_scenario(const Network& net, int horizon, double load_scale,
                       const Prices& prices) {
  Scenario sc;
  sc.step_hours = 2.0;
  sc.ambient_temp.assign(horizon, 20.0);
  sc.derate.assign(horizon, DeratingFactors{1.0, 1.0, 1.0});
  sc.prices.assign(horizon, prices);
  sc.load_p.assign(horizon, {});
  sc.load_q.assign(horizon, {});
  for (int t = 0; t < horizon; ++t) {
    for (const auto& b : net.buses()) {
      sc.load_p[t].push_back(b.base_load_p * load_scale);
      sc.load_q[t].push_back(b.base_load_q * load_scale);
    }
  }
  return sc;
}

DispatchSolution solve_cm(const Network& net, const Scenario& sc) {
  OpfProgram prog = build_cm(net, sc);
  SolveResult r = solve_misocp(prog.program);
  REQUIRE(r.status == SolveStatus::Optimal);
  return extract_solution(prog.vars, r.x, net);
}

}  // namespace

TEST_CASE("zero load yields a zero-cost dispatch") {
  Network net = build_network(make_buses(2), {line(0, 1, 0.05, 0.05)});
  Scenario sc = flat_scenario(net, 2, 0.0, Prices{50.0, 0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  CHECK(operational_cost(sol, sc) == doctest::Approx(0.0).epsilon(1e-5));
  for (int t = 0; t < 2; ++t) {
    CHECK(std::abs(sol.p0[t]) < 1e-6);
    CHECK(sol.v[t][1] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("single load is served through the substation with losses") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.1;
  buses[1].base_load_q = 0.05;
  Network net = build_network(buses, {line(0, 1, 0.02, 0.04)});
  Scenario sc = flat_scenario(net, 1, 1.0, Prices{1.0, 0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  // p0 covers the load plus the ohmic loss l·R exactly (balance equality)
  const double loss = sol.l[0][1] * 0.02;
  CHECK(sol.p0[0] == doctest::Approx(0.1 + loss).epsilon(1e-7));
  CHECK(sol.p0[0] > 0.1);
  // the cone must be tight at the optimum of a loss-priced objective
  const double fp = sol.fp[0][1], fq = sol.fq[0][1];
  CHECK(sol.l[0][1] * sol.v[0][1] == doctest::Approx(fp * fp + fq * fq).epsilon(1e-5));
  // voltage drops below the substation
  CHECK(sol.v[0][1] < 1.0);
  CHECK(feasibility_report(sol, net, sc, 1e-5).empty());
}

TEST_CASE("cheap local generation displaces substation imports") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.2;
  DerAssets ders;
  ders.dg[1] = DgParams{0.0, 0.15, -0.1, 0.1};
  Network net_dg = build_network(buses, {line(0, 1, 0.01, 0.01)}, ders);
  Scenario sc = flat_scenario(net_dg, 1, 1.0, Prices{10.0, 1.0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net_dg, sc);
  CHECK(sol.dg_p.at(1)[0] == doctest::Approx(0.15).epsilon(1e-5));
  CHECK(sol.p0[0] == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(net_injection(sol, net_dg, sc, 1, 0) ==
        doctest::Approx(-0.2 + sol.dg_p.at(1)[0]).epsilon(1e-9));
}

TEST_CASE("generator limits shrink with temperature derating") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.2;
  DerAssets ders;
  ders.dg[1] = DgParams{0.0, 0.15, -0.1, 0.1};
  Network net = build_network(buses, {line(0, 1, 0.01, 0.01)}, ders);
  Scenario sc = flat_scenario(net, 1, 1.0, Prices{10.0, 1.0, 0, 0, 0});
  sc.derate[0].dg = 0.5;  // halve the DG ceiling
  DispatchSolution sol = solve_cm(net, sc);
  CHECK(sol.dg_p.at(1)[0] == doctest::Approx(0.075).epsilon(1e-5));
}

TEST_CASE("battery state of charge follows the recursion") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.05;
  DerAssets ders;
  BessParams bess;
  bess.p_max = 0.1;
  bess.q_min = -0.1;
  bess.q_max = 0.1;
  bess.soc_min = 0.0;
  bess.soc_max = 1.0;
  bess.eta_c = 1.0;
  bess.eta_d = 1.0;
  bess.soc_init = 0.0;
  ders.bess[1] = bess;
  Network net = build_network(buses, {line(0, 1, 0.01, 0.01)}, ders);
  // negative charge price rewards charging early; discharging costs a lot
  Scenario sc = flat_scenario(net, 2, 1.0, Prices{1.0, 0, -15.0, 28.0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  const auto& c = sol.bess_c.at(1);
  const auto& d = sol.bess_d.at(1);
  const auto& soc = sol.bess_soc.at(1);
  const double denom = bess.p_max * sc.derate[0].bess;
  CHECK(soc[0] == doctest::Approx(c[0] / denom - d[0] / denom).epsilon(1e-6));
  CHECK(soc[1] ==
        doctest::Approx(soc[0] + c[1] / denom - d[1] / denom).epsilon(1e-6));
  // charging and discharging never overlap (gating binary)
  for (int t = 0; t < 2; ++t) CHECK(std::min(c[t], d[t]) < 1e-6);
  CHECK(feasibility_report(sol, net, sc, 1e-5).empty());
}

TEST_CASE("operational cost sums the priced quantities") {
  DispatchSolution sol;
  sol.horizon = 2;
  sol.p0 = {0.5, 0.7};
  sol.dg_p[3] = {0.1, 0.2};
  sol.bess_c[4] = {0.05, 0.0};
  sol.bess_d[4] = {0.0, 0.05};
  sol.dr_p[5] = {0.01, 0.02};
  Scenario sc;
  sc.ambient_temp = {20.0, 20.0};
  sc.prices = {Prices{50, 8, -15, 28, 100}, Prices{60, 8, -15, 28, 100}};
  const double expect = 50 * 0.5 + 8 * 0.1 + (-15) * 0.05 + 100 * 0.01 +
                        60 * 0.7 + 8 * 0.2 + 28 * 0.05 + 100 * 0.02;
  CHECK(operational_cost(sol, sc) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("feasibility report flags a corrupted voltage") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.1;
  Network net = build_network(buses, {line(0, 1, 0.02, 0.04)});
  Scenario sc = flat_scenario(net, 1, 1.0, Prices{1.0, 0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  sol.v[0][1] += 0.05;
  auto report = feasibility_report(sol, net, sc, 1e-5);
  CHECK(!report.empty());
  bool drop_flagged = false;
  for (const auto& v : report)
    if (v.constraint == "voltage_drop") drop_flagged = true;
  CHECK(drop_flagged);
}

TEST_CASE("operating point exposes the reliability covariates") {
  auto buses = make_buses(3);
  buses[1].base_load_p = 0.1;
  buses[2].base_load_p = 0.05;
  DerAssets ders;
  ders.dg[2] = DgParams{0.0, 0.08, -0.05, 0.05};
  Network net =
      build_network(buses, {line(0, 1, 0.02, 0.04), line(1, 2, 0.03, 0.03)}, ders);
  Scenario sc = flat_scenario(net, 1, 1.0, Prices{10.0, 1.0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  EensPoint pt = eens_point(sol, net, sc, 0);
  CHECK(pt.substation_abs == doctest::Approx(std::abs(sol.p0[0])).epsilon(1e-12));
  CHECK(pt.bus[2].consumption == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(pt.bus[2].dg == doctest::Approx(sol.dg_p.at(2)[0]).epsilon(1e-12));
  CHECK(pt.bus[2].injection_abs ==
        doctest::Approx(std::abs(net_injection(sol, net, sc, 2, 0))).epsilon(1e-12));
  CHECK(pt.line_current_sq[0] == doctest::Approx(sol.l[0][1]).epsilon(1e-12));
  CHECK(pt.line_current_sq[1] == doctest::Approx(sol.l[0][2]).epsilon(1e-12));
}

TEST_CASE("bundled case program has the expected shape") {
  Network net = load_network_json(std::string(RELGRID_DATA_DIR) + "/case33.json");
  Scenario sc =
      load_scenario_json(std::string(RELGRID_DATA_DIR) + "/scenario33.json", net);
  OpfProgram prog = build_cm(net, sc);
  // 3 cones per line-step: two apparent-power caps and one current-voltage cone
  CHECK(static_cast<int>(prog.program.cones().size()) == 32 * 12 * 3);
  // 4 BESS and 3 DR sites gated per step
  CHECK(static_cast<int>(prog.program.binaries().size()) == (4 + 3) * 12);
  CHECK(prog.vars.horizon == 12);
  CHECK(prog.vars.reformulated == false);
}

TEST_CASE("solution serialization carries every block") {
  auto buses = make_buses(2);
  buses[1].base_load_p = 0.1;
  Network net = build_network(buses, {line(0, 1, 0.02, 0.04)});
  Scenario sc = flat_scenario(net, 1, 1.0, Prices{1.0, 0, 0, 0, 0});
  DispatchSolution sol = solve_cm(net, sc);
  const std::string js = solution_to_json(sol, net);
  for (const char* key : {"\"p0\"", "\"q0\"", "\"v\"", "\"l\"", "\"fp\"",
                          "\"dg_p\"", "\"bess_soc\"", "\"dr_p\""})
    CHECK(js.find(key) != std::string::npos);
}
