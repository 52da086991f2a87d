#include <array>
#include <cmath>
#include <random>

#include <doctest.h>

#include "relgrid/grid.hpp"
#include "relgrid/reliability.hpp"

using namespace relgrid;

namespace {

Network two_bus_net() {
  std::vector<BusParams> buses(2);
  buses[0].id = 0;
  buses[0].is_substation = true;
  buses[1].id = 1;
  LineParams ln;
  ln.upstream = 0;
  ln.id = 1;
  ln.resistance = 0.01;
  ln.reactance = 0.01;
  ln.apparent_limit = 10.0;
  return build_network(buses, {ln});
}

FailureModel table_model() {
  FailureModel m;
  m.bus[0] = {1156113700.0, 1.8307053, 0.24685119};
  m.bus[1] = {268660350.0, 0.30390543, 0.30673215};
  m.line[1] = {460174750.0, 0.9500556, 0.24567656};
  return m;
}

}  // namespace

TEST_CASE("logistic midpoint at unit odds") {
  FailureModel m;
  m.bus[3] = {1.0, 0.0, 0.0};
  m.line[2] = {1.0, 0.0, 0.0};
  CHECK(interval_unreliability_bus(m, 3, 7.0, -4.0) == doctest::Approx(0.5));
  CHECK(interval_unreliability_line(m, 2, 0.3, 55.0) == doctest::Approx(0.5));
}

TEST_CASE("baseline interval unreliability matches the coefficient table") {
  FailureModel m = table_model();
  CHECK(interval_unreliability_bus(m, 1, 0.0, 0.0) ==
        doctest::Approx(3.7222e-9).epsilon(1e-4));
  CHECK(interval_unreliability_line(m, 1, 0.0, 0.0) ==
        doctest::Approx(2.1731e-9).epsilon(1e-4));
}

TEST_CASE("monotonicity follows the coefficient signs") {
  FailureModel m = table_model();
  double prev = 0.0;
  for (double p = 0.0; p <= 0.5; p += 0.1) {
    const double pr = interval_unreliability_bus(m, 1, p, 21.5);
    CHECK(pr > prev);
    CHECK(pr < 1.0);
    prev = pr;
  }
  // a negative loading coefficient flips the direction
  FailureModel neg;
  neg.line[21] = {169194040.0, -0.05748484, 0.48545042};
  CHECK(interval_unreliability_line(neg, 21, 1.0, 20.0) <
        interval_unreliability_line(neg, 21, 0.0, 20.0));
}

TEST_CASE("missing coefficients raise UnknownComponent") {
  FailureModel m = table_model();
  CHECK_THROWS_AS(interval_unreliability_bus(m, 9, 0.0, 0.0), UnknownComponent);
  FailureModel no_line = table_model();
  no_line.line.erase(1);
  CHECK_THROWS_AS(no_line.require_coverage(two_bus_net()), UnknownComponent);
  FailureModel no_bus = table_model();
  no_bus.bus.erase(1);
  CHECK_THROWS_AS(no_bus.require_coverage(two_bus_net()), UnknownComponent);
  CHECK_NOTHROW(table_model().require_coverage(two_bus_net()));
}

TEST_CASE("expected failure cost equals the brute-force expectation") {
  // One bus behind one line; enumerate the 4 independent joint outcomes.
  Network net = two_bus_net();
  FailureModel m;
  m.bus[0] = {1e9, 1.0, 0.1};
  m.bus[1] = {50.0, 2.0, 0.05};   // sizable probabilities on purpose
  m.line[1] = {80.0, 1.5, 0.02};
  ShedWeights w{1e5, 1e5, 2e4, 2e4, 2e4, 2e4};
  EensPoint pt;
  pt.substation_abs = 0.7;
  pt.bus.resize(2);
  pt.bus[1] = {0.4, 0.3, 0.05, 0.02, 0.01, 0.12};
  pt.line_current_sq = {0.9};
  const double at = 24.0;
  const double cost = eens_cost(pt, w, m, net, at);

  const double pr_b = interval_unreliability_bus(m, 1, pt.bus[1].injection_abs, at);
  const double pr_l = interval_unreliability_line(m, 1, 0.9, at);
  const double pr_0 = interval_unreliability_bus(m, 0, 0.7, at);
  const double omega = w.consumption * 0.4 + w.dg * 0.3 + w.bess_charge * 0.05 +
                       w.bess_discharge * 0.02 + w.dr * 0.01;
  double expectation = w.substation * 0.7 * pr_0;
  // four outcomes: (bus fails?, line fails?) — served only when neither fails
  expectation += omega * (pr_b * pr_l + pr_b * (1 - pr_l) + (1 - pr_b) * pr_l);
  CHECK(cost == doctest::Approx(expectation).epsilon(1e-12));
}

TEST_CASE("zero-probability limit and zero weights") {
  Network net = two_bus_net();
  FailureModel m;
  m.bus[0] = {1e300, 0.0, 0.0};
  m.bus[1] = {1e300, 0.0, 0.0};
  m.line[1] = {1e300, 0.0, 0.0};
  ShedWeights w{1e5, 1e5, 2e4, 2e4, 2e4, 2e4};
  EensPoint pt;
  pt.substation_abs = 1.0;
  pt.bus.resize(2);
  pt.bus[1] = {1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  pt.line_current_sq = {1.0};
  CHECK(eens_cost(pt, w, m, net, 20.0) == doctest::Approx(0.0).epsilon(1e-250));
  const EensGradient g = eens_gradient(pt, ShedWeights{}, m, net, 20.0);
  CHECK(g.d_substation_abs == 0.0);
  CHECK(g.d_line[0] == 0.0);
  CHECK(g.d_injection[1] == 0.0);
}

TEST_CASE("single-bus slope is the logistic derivative identity") {
  Network net = two_bus_net();
  FailureModel m;
  m.bus[0] = {1e12, 0.0, 0.0};
  m.bus[1] = {100.0, 1.3, 0.0};
  m.line[1] = {1e300, 0.0, 0.0};  // line never fails
  ShedWeights w{};
  w.consumption = 10.0;
  EensPoint pt;
  pt.bus.resize(2);
  pt.bus[1].consumption = 1.0;  // Ω = 10, constant
  pt.bus[1].injection_abs = 2.0;
  pt.line_current_sq = {0.0};
  const EensGradient g = eens_gradient(pt, w, m, net, 0.0);
  const double pr = interval_unreliability_bus(m, 1, 2.0, 0.0);
  CHECK(g.d_injection[1] == doctest::Approx(10.0 * 1.3 * pr * (1 - pr)).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
  // Random multi-bus feeder: 0−1−2, 1−3.
  std::vector<BusParams> buses(4);
  for (int i = 0; i < 4; ++i) buses[i].id = i;
  buses[0].is_substation = true;
  auto mkline = [](int f, int t) {
    LineParams ln;
    ln.upstream = f;
    ln.id = t;
    ln.resistance = 0.01;
    ln.reactance = 0.02;
    ln.apparent_limit = 10.0;
    return ln;
  };
  Network net = build_network(buses, {mkline(0, 1), mkline(1, 2), mkline(1, 3)});
  FailureModel m;
  m.bus[0] = {1e8, 1.8, 0.25};
  m.bus[1] = {3e7, 0.30, 0.31};
  m.bus[2] = {1e6, 0.9, 0.2};
  m.bus[3] = {4e5, 1.2, 0.15};
  m.line[1] = {4e8, 0.95, 0.25};
  m.line[2] = {1e5, 2.4, 0.3};
  m.line[3] = {2e4, -0.6, 0.28};
  // O(1) weights keep the finite-difference quotient well conditioned; the
  // gradient is linear in the weights so the comparison is scale-free
  ShedWeights w{1.0, 1.0, 0.2, 0.2, 0.2, 0.2};
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unif(0.01, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    EensPoint pt;
    pt.substation_abs = unif(rng);
    pt.bus.resize(4);
    for (int i = 1; i < 4; ++i)
      pt.bus[i] = {unif(rng), unif(rng), unif(rng), unif(rng), unif(rng), unif(rng)};
    pt.line_current_sq = {unif(rng), unif(rng), unif(rng)};
    const double at = 10.0 + 20.0 * unif(rng);
    const EensGradient g = eens_gradient(pt, w, m, net, at);
    auto fd = [&](auto&& setter, double base) {
      const double h = 1e-6 * std::max(1.0, std::abs(base));
      EensPoint up = pt, dn = pt;
      setter(up, base + h);
      setter(dn, base - h);
      return (eens_cost(up, w, m, net, at) - eens_cost(dn, w, m, net, at)) /
             (2.0 * h);
    };
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max(1.0, std::abs(b));
    };
    worst = std::max(worst,
                     rel(g.d_substation_abs,
                         fd([](EensPoint& p, double v) { p.substation_abs = v; },
                            pt.substation_abs)));
    for (int i = 1; i < 4; ++i) {
      const int bi = i;
      worst = std::max(
          worst, rel(g.d_injection[i],
                     fd([bi](EensPoint& p, double v) { p.bus[bi].injection_abs = v; },
                        pt.bus[i].injection_abs)));
      worst = std::max(
          worst, rel(g.d_dg[i], fd([bi](EensPoint& p, double v) { p.bus[bi].dg = v; },
                                   pt.bus[i].dg)));
      worst = std::max(
          worst,
          rel(g.d_line[i - 1],
              fd([bi](EensPoint& p, double v) { p.line_current_sq[bi - 1] = v; },
                 pt.line_current_sq[i - 1])));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("curvature probe reproduces the published sign pattern") {
  const std::array<double, 6> nu{8043.2197, 2e4,        5.0833e-12,
                                 0.3039,    1.1032e-11, 0.9501};
  CHECK(hessian_probe(nu, 0.1, 1.0, {0.1, 0.4}) < 0.0);
  CHECK(hessian_probe(nu, 0.1, 1.0, {0.4, 0.1}) > 0.0);
  CHECK(hessian_probe(nu, 0.1, 1.0, {0.0, 0.0}) == 0.0);
}

TEST_CASE("hazard gap bound on small odds") {
  CHECK(hazard_gap(0.0) == 0.0);
  for (double g = 1e-4; g <= 0.1; g *= 1.6) CHECK(hazard_gap(g) <= g * g);
  CHECK(hazard_gap(0.01) <= 1e-4);
  // leading term is G²/2
  CHECK(hazard_gap(0.1) == doctest::Approx(0.005).epsilon(1.0));
}

TEST_CASE("coefficient CSV round trip") {
  FailureModel m = table_model();
  const std::string path = "coeffs_roundtrip_test.csv";
  save_failure_model_csv(path, m);
  FailureModel back = load_failure_model_csv(path);
  CHECK(back.bus_coeffs(1).lambda == doctest::Approx(m.bus_coeffs(1).lambda));
  CHECK(back.line_coeffs(1).beta1 == doctest::Approx(m.line_coeffs(1).beta1));
  CHECK(back.bus.count(0) == 1);
  CHECK(back.line.count(0) == 0);
}

TEST_CASE("bundled coefficients cover the bundled case") {
  Network net = load_network_json(std::string(RELGRID_DATA_DIR) + "/case33.json");
  FailureModel m =
      load_failure_model_csv(std::string(RELGRID_DATA_DIR) + "/coeffs33.csv");
  CHECK_NOTHROW(m.require_coverage(net));
  CHECK(m.bus_coeffs(0).lambda == doctest::Approx(1156113700.0));
  CHECK(m.line_coeffs(21).beta1 == doctest::Approx(-0.05748484));
}
