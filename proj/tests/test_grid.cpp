#include <doctest.h>

#include "relgrid/grid.hpp"

using namespace relgrid;

namespace {

std::vector<BusParams> make_buses(int n) {
  std::vector<BusParams> buses(n);
  for (int i = 0; i < n; ++i) buses[i].id = i;
  buses[0].is_substation = true;
  return buses;
}

LineParams line(int from, int to, double r = 0.01, double x = 0.01,
                double s = 10.0) {
  LineParams ln;
  ln.upstream = from;
  ln.id = to;
  ln.resistance = r;
  ln.reactance = x;
  ln.apparent_limit = s;
  return ln;
}

}  // namespace

TEST_CASE("radial chain builds with correct ancestry") {
  Network net = build_network(make_buses(4), {line(0, 1), line(1, 2), line(2, 3)});
  CHECK(net.ancestor(1) == 0);
  CHECK(net.ancestor(3) == 2);
  CHECK(net.children(1) == std::set<int>{2});
  CHECK(net.minimum_cut_set(3) == std::vector<int>{1, 2, 3});
  CHECK(net.topological_order().front() == 0);
}

TEST_CASE("branching feeder: children and cut sets") {
  // 0−1, 1−2, 2−3, 2−22-like shape on small scale
  Network net = build_network(make_buses(5),
                              {line(0, 1), line(1, 2), line(2, 3), line(2, 4)});
  CHECK(net.children(2) == std::set<int>({3, 4}));
  CHECK(net.minimum_cut_set(4) == std::vector<int>{1, 2, 4});
}

TEST_CASE("line orientation is normalized against the input direction") {
  // Input gives (2,1) reversed; BFS must orient it as upstream=1, id=2.
  Network net = build_network(make_buses(3), {line(0, 1), line(2, 1)});
  CHECK(net.ancestor(2) == 1);
  CHECK(net.line(2).upstream == 1);
}

TEST_CASE("cycle detection") {
  CHECK_THROWS_AS(
      build_network(make_buses(3), {line(0, 1), line(1, 2), line(2, 1)}),
      CycleDetected);
  CHECK_THROWS_AS(
      build_network(make_buses(3), {line(0, 1), line(1, 2), line(2, 0)}),
      CycleDetected);
  CHECK_THROWS_AS(build_network(make_buses(2), {line(1, 1)}), CycleDetected);
}

TEST_CASE("duplicate line to the same bus") {
  CHECK_THROWS_AS(
      build_network(make_buses(3), {line(0, 1), line(0, 1), line(1, 2)}),
      DuplicateLineToBus);
}

TEST_CASE("disconnected bus") {
  CHECK_THROWS_AS(build_network(make_buses(3), {line(0, 1)}), Disconnected);
}

TEST_CASE("substation placement is validated") {
  auto buses = make_buses(2);
  buses[0].is_substation = false;
  CHECK_THROWS_AS(build_network(buses, {line(0, 1)}), MissingSubstation);
  auto two_subs = make_buses(2);
  two_subs[1].is_substation = true;
  CHECK_THROWS_AS(build_network(two_subs, {line(0, 1)}), InputError);
}

TEST_CASE("unknown endpoints and components") {
  CHECK_THROWS_AS(build_network(make_buses(2), {line(0, 7)}), UnknownBus);
  Network net = build_network(make_buses(2), {line(0, 1)});
  CHECK_THROWS_AS(net.bus(9), UnknownBus);
  CHECK_THROWS_AS(net.line(0), UnknownComponent);
  CHECK_THROWS_AS(net.minimum_cut_set(-1), UnknownBus);
}

TEST_CASE("DER validation") {
  DerAssets ders;
  ders.dg[5] = DgParams{0, 0.1, 0, 0.1};
  CHECK_THROWS_AS(build_network(make_buses(3), {line(0, 1), line(1, 2)}, ders),
                  UnknownDerBus);
  DerAssets bad_bess;
  bad_bess.bess[1] = BessParams{0, 1, 0, 1, 0.5, 0.4, 1, 1, 0, 0.45};
  CHECK_THROWS_AS(
      build_network(make_buses(3), {line(0, 1), line(1, 2)}, bad_bess),
      InputError);
}

TEST_CASE("bundled 33-bus case topology") {
  Network net = load_network_json(std::string(RELGRID_DATA_DIR) + "/case33.json");
  CHECK(net.bus_count() == 33);
  CHECK(net.line_count() == 32);
  CHECK(net.children(2) == std::set<int>({3, 22}));
  CHECK(net.minimum_cut_set(24) == std::vector<int>{1, 2, 22, 23, 24});
  CHECK(net.minimum_cut_set(17).size() == 17);
  // total base load of the feeder
  double p = 0, q = 0;
  for (const auto& b : net.buses()) {
    p += b.base_load_p;
    q += b.base_load_q;
  }
  const double mva = net.power_base_mva();
  CHECK(p * mva * 1000 == doctest::Approx(3715.0).epsilon(1e-9));
  CHECK(q * mva * 1000 == doctest::Approx(2300.0).epsilon(1e-9));
  // serialization round trip keeps the shape
  const std::string dumped = network_to_json(net);
  CHECK(dumped.find("\"mcs\"") != std::string::npos);
}
