#include <doctest.h>

#include "relgrid/grid.hpp"
#include "relgrid/scenario.hpp"

using namespace relgrid;

TEST_CASE("load scaling maps the profile peak to the base load") {
  auto loads = scale_loads({0.1}, {5000.0, 10000.0});
  CHECK(loads[0][0] == doctest::Approx(0.05));
  CHECK(loads[1][0] == doctest::Approx(0.1));
  auto flat = scale_loads({0.1}, {7.0, 7.0, 7.0});
  for (const auto& row : flat) CHECK(row[0] == doctest::Approx(0.1));
}

TEST_CASE("load scaling preserves ratios between buses") {
  auto loads = scale_loads({0.2, 0.05}, {3.0, 9.0, 6.0});
  for (const auto& row : loads) CHECK(row[0] / row[1] == doctest::Approx(4.0));
}

TEST_CASE("degenerate profiles are rejected") {
  CHECK_THROWS_AS(scale_loads({0.1}, {}), EmptyProfile);
  CHECK_THROWS_AS(scale_loads({0.1}, {0.0, -1.0}), NonPositiveMax);
}

TEST_CASE("temperature derating polynomials") {
  const DeratingFactors at0 = derating(0.0);
  CHECK(at0.line == doctest::Approx(1.1945).epsilon(1e-12));
  CHECK(at0.dg == doctest::Approx(1.1160).epsilon(1e-12));
  CHECK(at0.bess == doctest::Approx(0.6075).epsilon(1e-12));
  const DeratingFactors warm = derating(21.5);
  CHECK(warm.line == doctest::Approx(1.02895).epsilon(1e-9));
  CHECK(warm.bess == doctest::Approx(0.95711).epsilon(1e-3));
}

TEST_CASE("derating monotonicity over the valid range") {
  double prev_line = derating(-30.0).line;
  double prev_dg = derating(-30.0).dg;
  double prev_bess = derating(-30.0).bess;
  for (double at = -29.0; at <= 60.0; at += 1.0) {
    const DeratingFactors f = derating(at);
    CHECK(f.line < prev_line);
    CHECK(f.dg < prev_dg);
    CHECK(f.bess > prev_bess);  // vertex at 61.56 °C, increasing below it
    prev_line = f.line;
    prev_dg = f.dg;
    prev_bess = f.bess;
  }
}

TEST_CASE("temperatures outside the plausible range are rejected") {
  CHECK_THROWS_AS(derating(-31.0), TemperatureOutOfRange);
  CHECK_THROWS_AS(derating(60.5), TemperatureOutOfRange);
  CHECK_NOTHROW(derating(60.0));
}

TEST_CASE("bundled scenario loads and validates") {
  Network net = load_network_json(std::string(RELGRID_DATA_DIR) + "/case33.json");
  Scenario sc =
      load_scenario_json(std::string(RELGRID_DATA_DIR) + "/scenario33.json", net);
  CHECK(sc.horizon() == 12);
  CHECK(sc.step_hours == doctest::Approx(2.0));
  // peak step carries the base loads
  double peak = 0.0;
  int peak_t = 0;
  for (int t = 0; t < 12; ++t) {
    double tot = 0.0;
    for (double v : sc.load_p[t]) tot += v;
    if (tot > peak) {
      peak = tot;
      peak_t = t;
    }
  }
  double base = 0.0;
  for (const auto& b : net.buses()) base += b.base_load_p;
  CHECK(sc.load_p[peak_t][24] == doctest::Approx(net.bus(24).base_load_p));
  CHECK(peak == doctest::Approx(base));
  // prices follow the bundled tariff
  CHECK(sc.prices[0].substation == doctest::Approx(50.0));
  CHECK(sc.prices[0].bess_charge == doctest::Approx(-15.0));
  CHECK(sc.weights.substation == doctest::Approx(1e5));
  CHECK(sc.weights.dg == doctest::Approx(2e4));
  CHECK(sc.ambient_temp[0] == doctest::Approx(21.5));
  sc.validate(net);
}

TEST_CASE("mismatched series lengths are rejected") {
  Network net = load_network_json(std::string(RELGRID_DATA_DIR) + "/case33.json");
  Scenario sc =
      load_scenario_json(std::string(RELGRID_DATA_DIR) + "/scenario33.json", net);
  sc.ambient_temp.pop_back();
  CHECK_THROWS_AS(sc.validate(net), DimensionMismatch);
}
