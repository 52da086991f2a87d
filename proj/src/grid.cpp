#include "relgrid/grid.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "relgrid/runio.hpp"

namespace relgrid {

using nlohmann::json;

int Network::ancestor(int bus) const {
  if (bus < 0 || bus >= bus_count()) throw UnknownBus("unknown bus " + std::to_string(bus));
  return ancestor_[bus];
}

const std::set<int>& Network::children(int bus) const {
  if (bus < 0 || bus >= bus_count()) throw UnknownBus("unknown bus " + std::to_string(bus));
  return children_[bus];
}

const LineParams& Network::line(int id) const {
  if (id < 1 || id >= bus_count())
    throw UnknownComponent("unknown line " + std::to_string(id));
  return lines_[id - 1];
}

const BusParams& Network::bus(int id) const {
  if (id < 0 || id >= bus_count()) throw UnknownBus("unknown bus " + std::to_string(id));
  return buses_[id];
}

const std::vector<int>& Network::minimum_cut_set(int bus) const {
  if (bus < 0 || bus >= bus_count()) throw UnknownBus("unknown bus " + std::to_string(bus));
  return mcs_[bus];
}

Network build_network(std::vector<BusParams> bus_records,
                      std::vector<LineParams> line_records, DerAssets ders,
                      double power_base_mva) {
  const int n = static_cast<int>(bus_records.size());
  if (n == 0) throw MissingSubstation("no buses given");
  std::sort(bus_records.begin(), bus_records.end(),
            [](const BusParams& a, const BusParams& b) { return a.id < b.id; });
  for (int i = 0; i < n; ++i) {
    if (bus_records[i].id != i)
      throw UnknownBus("bus ids must be contiguous 0..N; missing or duplicate id " +
                       std::to_string(i));
    if (!(bus_records[i].voltage_sq_min < bus_records[i].voltage_sq_max))
      throw InputError("bus " + std::to_string(i) + ": voltage_sq_min must be < voltage_sq_max");
  }
  if (!bus_records[0].is_substation)
    throw MissingSubstation("bus 0 must be the substation");
  for (int i = 1; i < n; ++i)
    if (bus_records[i].is_substation)
      throw InputError("bus " + std::to_string(i) + " also flagged as substation");

  for (const auto& ln : line_records) {
    if (ln.upstream < 0 || ln.upstream >= n || ln.id < 0 || ln.id >= n)
      throw UnknownBus("line (" + std::to_string(ln.upstream) + "," +
                       std::to_string(ln.id) + ") references an unknown bus");
    if (ln.upstream == ln.id)
      throw CycleDetected("line at bus " + std::to_string(ln.id) +
                          " connects a bus to itself");
    if (ln.resistance < 0 || ln.reactance < 0)
      throw InputError("line to bus " + std::to_string(ln.id) + ": R and X must be >= 0");
    if (!(ln.apparent_limit > 0))
      throw InputError("line to bus " + std::to_string(ln.id) +
                       ": apparent limit must be > 0");
  }

  // Exact repeated directed pair is a duplicate; any edge whose endpoints are
  // already connected (union-find over undirected pairs) closes a cycle.
  {
    std::set<std::pair<int, int>> seen;
    for (const auto& ln : line_records) {
      if (!seen.insert({ln.upstream, ln.id}).second)
        throw DuplicateLineToBus("duplicate line from bus " + std::to_string(ln.upstream) +
                                 " to bus " + std::to_string(ln.id));
    }
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&parent](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& ln : line_records) {
      int a = find(ln.upstream), b = find(ln.id);
      if (a == b)
        throw CycleDetected("cycle through bus " + std::to_string(ln.id));
      parent[a] = b;
    }
  }

  // Orient the tree away from the substation by BFS; input (from,to) order is
  // not trusted, the downstream endpoint defines the line id.
  std::vector<std::vector<std::pair<int, const LineParams*>>> adj(n);
  for (const auto& ln : line_records) {
    adj[ln.upstream].push_back({ln.id, &ln});
    adj[ln.id].push_back({ln.upstream, &ln});
  }
  std::vector<int> parent_of(n, -2);
  parent_of[0] = -1;
  std::vector<int> queue{0};
  std::vector<LineParams> oriented(n > 1 ? n - 1 : 0);
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (auto [w, ln] : adj[u]) {
      if (parent_of[w] != -2) continue;
      parent_of[w] = u;
      LineParams o = *ln;
      o.upstream = u;
      o.id = w;
      oriented[w - 1] = o;
      queue.push_back(w);
    }
  }
  for (int i = 0; i < n; ++i)
    if (parent_of[i] == -2)
      throw Disconnected("bus " + std::to_string(i) + " is not connected to the substation");

  Network net;
  net.buses_ = std::move(bus_records);
  net.lines_ = std::move(oriented);
  net.power_base_mva_ = power_base_mva;
  net.ancestor_.assign(n, -1);
  net.children_.assign(n, {});
  net.mcs_.assign(n, {});
  for (const auto& ln : net.lines_) {
    net.ancestor_[ln.id] = ln.upstream;
    net.children_[ln.upstream].insert(ln.id);
  }
  for (int i = 1; i < n; ++i) {
    std::vector<int> path;
    for (int cur = i; cur != 0; cur = net.ancestor_[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    net.mcs_[i] = path;  // line ids equal their downstream bus ids
  }

  // Topological order: root first, then by path depth (stable within depth).
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&net](int a, int b) {
    return net.mcs_[a].size() < net.mcs_[b].size();
  });
  net.topo_order_ = std::move(order);

  for (const auto& [b, dg] : ders.dg) {
    if (b <= 0 || b >= n) throw UnknownDerBus("DG placed at unknown bus " + std::to_string(b));
    if (dg.p_max < dg.p_min) throw InputError("DG at bus " + std::to_string(b) + ": p_max < p_min");
  }
  for (const auto& [b, bess] : ders.bess) {
    if (b <= 0 || b >= n) throw UnknownDerBus("BESS placed at unknown bus " + std::to_string(b));
    if (!(0 <= bess.soc_min && bess.soc_min <= bess.soc_init &&
          bess.soc_init <= bess.soc_max && bess.soc_max <= 1.0))
      throw InputError("BESS at bus " + std::to_string(b) +
                       ": need 0 <= soc_min <= soc_init <= soc_max <= 1");
    if (!(bess.eta_c > 0 && bess.eta_c <= 1 && bess.eta_d > 0 && bess.eta_d <= 1))
      throw InputError("BESS at bus " + std::to_string(b) + ": efficiencies must be in (0,1]");
    if (!(bess.self_discharge >= 0 && bess.self_discharge < 1))
      throw InputError("BESS at bus " + std::to_string(b) + ": self-discharge must be in [0,1)");
  }
  for (const auto& [b, dr] : ders.dr) {
    if (b <= 0 || b >= n) throw UnknownDerBus("DR placed at unknown bus " + std::to_string(b));
  }
  net.ders_ = std::move(ders);
  return net;
}

Network load_network_json(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InputError("cannot parse network JSON " + path + ": " + e.what());
  }
  try {
    std::vector<BusParams> buses;
    for (const auto& jb : doc.at("buses")) {
      BusParams b;
      b.id = jb.at("id").get<int>();
      b.shunt_g = jb.value("shunt_g", 0.0);
      b.shunt_b = jb.value("shunt_b", 0.0);
      b.base_load_p = jb.value("load_p", 0.0);
      b.base_load_q = jb.value("load_q", 0.0);
      b.voltage_sq_min = jb.value("v_sq_min", 0.9);
      b.voltage_sq_max = jb.value("v_sq_max", 1.1);
      b.is_substation = jb.value("substation", false);
      if (b.is_substation) {
        b.substation_voltage_sq = jb.value("v_sq_fixed", 1.0);
        b.substation_p_max = jb.value("p_max", BusParams::kInf);
        b.substation_q_max = jb.value("q_max", BusParams::kInf);
      }
      buses.push_back(b);
    }
    std::vector<LineParams> lines;
    for (const auto& jl : doc.at("lines")) {
      LineParams ln;
      int from = jl.at("from").get<int>();
      int to = jl.at("to").get<int>();
      ln.id = to;  // lines are identified by their downstream bus
      ln.upstream = from;
      ln.resistance = jl.at("r").get<double>();
      ln.reactance = jl.at("x").get<double>();
      ln.apparent_limit = jl.value("s_max", 1.0);
      lines.push_back(ln);
    }
    DerAssets ders;
    if (doc.contains("ders")) {
      const auto& jd = doc["ders"];
      for (const auto& jg : jd.value("dg", json::array())) {
        DgParams g;
        g.p_min = jg.value("p_min", 0.0);
        g.p_max = jg.at("p_max").get<double>();
        g.q_min = jg.value("q_min", 0.0);
        g.q_max = jg.value("q_max", 0.0);
        ders.dg[jg.at("bus").get<int>()] = g;
      }
      for (const auto& jb : jd.value("bess", json::array())) {
        BessParams bp;
        bp.p_min = jb.value("p_min", 0.0);
        bp.p_max = jb.at("p_max").get<double>();
        bp.q_min = jb.value("q_min", 0.0);
        bp.q_max = jb.value("q_max", 0.0);
        bp.soc_min = jb.value("soc_min", 0.0);
        bp.soc_max = jb.value("soc_max", 1.0);
        bp.eta_c = jb.value("eta_c", 1.0);
        bp.eta_d = jb.value("eta_d", 1.0);
        bp.self_discharge = jb.value("self_discharge", 0.0);
        bp.soc_init = jb.value("soc_init", 0.0);
        ders.bess[jb.at("bus").get<int>()] = bp;
      }
      for (const auto& jr : jd.value("dr", json::array())) {
        DrParams d;
        d.p_min = jr.value("p_min", 0.0);
        d.p_max = jr.at("p_max").get<double>();
        d.q_min = jr.value("q_min", 0.0);
        d.q_max = jr.value("q_max", 0.0);
        ders.dr[jr.at("bus").get<int>()] = d;
      }
    }
    double base = doc.value("power_base_mva", 1.0);
    return build_network(std::move(buses), std::move(lines), std::move(ders), base);
  } catch (const json::exception& e) {
    throw InputError("malformed network JSON " + path + ": " + e.what());
  }
}

std::string network_to_json(const Network& net) {
  json doc;
  doc["power_base_mva"] = net.power_base_mva();
  doc["buses"] = json::array();
  for (const auto& b : net.buses()) {
    json jb{{"id", b.id},       {"shunt_g", b.shunt_g},       {"shunt_b", b.shunt_b},
            {"load_p", b.base_load_p}, {"load_q", b.base_load_q},
            {"v_sq_min", b.voltage_sq_min}, {"v_sq_max", b.voltage_sq_max}};
    if (b.is_substation) {
      jb["substation"] = true;
      jb["v_sq_fixed"] = b.substation_voltage_sq;
    }
    doc["buses"].push_back(jb);
  }
  doc["lines"] = json::array();
  for (const auto& ln : net.lines()) {
    doc["lines"].push_back(json{{"from", ln.upstream},
                                {"to", ln.id},
                                {"r", ln.resistance},
                                {"x", ln.reactance},
                                {"s_max", ln.apparent_limit}});
  }
  doc["ancestor"] = json::object();
  doc["mcs"] = json::object();
  for (int i = 1; i < net.bus_count(); ++i) {
    doc["ancestor"][std::to_string(i)] = net.ancestor(i);
    doc["mcs"][std::to_string(i)] = net.minimum_cut_set(i);
  }
  return doc.dump(2);
}

}  // namespace relgrid
