#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "relgrid/errors.hpp"

namespace relgrid {

/// Bus data. Index 0 is the substation at the feeder root.
struct BusParams {
  int id = 0;
  double shunt_g = 0.0;  // p.u.
  double shunt_b = 0.0;  // p.u.
  double base_load_p = 0.0;  // p.u.
  double base_load_q = 0.0;  // p.u.
  double voltage_sq_min = 0.81;
  double voltage_sq_max = 1.21;
  bool is_substation = false;
  // substation-only fields
  double substation_voltage_sq = 1.0;
  double substation_p_max = kInf;
  double substation_q_max = kInf;

  static constexpr double kInf = 1e30;
};

/// Line data. A line carries the id of its downstream bus; (from,to) pairs in
/// input files are normalized to (upstream, id) by the loader.
struct LineParams {
  int id = 0;        // downstream bus id
  int upstream = 0;  // ancestor bus id
  double resistance = 0.0;      // p.u.
  double reactance = 0.0;       // p.u.
  double apparent_limit = 1.0;  // p.u.
};

struct DgParams {
  double p_min = 0, p_max = 0, q_min = 0, q_max = 0;
};

struct BessParams {
  double p_min = 0, p_max = 0, q_min = 0, q_max = 0;
  double soc_min = 0, soc_max = 1;
  double eta_c = 1, eta_d = 1;
  double self_discharge = 0;
  double soc_init = 0;
};

struct DrParams {
  double p_min = 0, p_max = 0, q_min = 0, q_max = 0;
};

struct DerAssets {
  std::map<int, DgParams> dg;
  std::map<int, BessParams> bess;
  std::map<int, DrParams> dr;
};

/// Immutable radial network. Ancestor/children maps and the per-bus
/// minimum cut-set (the line path to the substation) are precomputed.
class Network {
 public:
  Network() = default;

  const std::vector<BusParams>& buses() const { return buses_; }
  const std::vector<LineParams>& lines() const { return lines_; }
  const DerAssets& ders() const { return ders_; }
  double power_base_mva() const { return power_base_mva_; }

  int bus_count() const { return static_cast<int>(buses_.size()); }
  int line_count() const { return static_cast<int>(lines_.size()); }

  int ancestor(int bus) const;
  const std::set<int>& children(int bus) const;

  /// Line of the same id; throws UnknownComponent for bus 0 or out of range.
  const LineParams& line(int id) const;
  const BusParams& bus(int id) const;

  /// Lines on the unique path bus -> substation, substation side first.
  const std::vector<int>& minimum_cut_set(int bus) const;

  /// Buses ordered so that every ancestor precedes its descendants.
  const std::vector<int>& topological_order() const { return topo_order_; }

  friend Network build_network(std::vector<BusParams> bus_records,
                               std::vector<LineParams> line_records,
                               DerAssets ders, double power_base_mva);

 private:
  std::vector<BusParams> buses_;
  std::vector<LineParams> lines_;
  DerAssets ders_;
  double power_base_mva_ = 1.0;
  std::vector<int> ancestor_;             // by bus id, -1 for substation
  std::vector<std::set<int>> children_;   // by bus id
  std::vector<std::vector<int>> mcs_;     // by bus id
  std::vector<int> topo_order_;
};

/// Validates radiality and populates ancestor/children/mcs maps.
/// Line records may arrive as (from,to) pairs already normalized to
/// downstream-bus ids by the caller (the JSON loader does this).
Network build_network(std::vector<BusParams> bus_records,
                      std::vector<LineParams> line_records,
                      DerAssets ders = {}, double power_base_mva = 1.0);

/// Loads a network JSON file (buses[], lines[], ders{} sections).
Network load_network_json(const std::string& path);

/// Canonical JSON serialization (deterministic field order).
std::string network_to_json(const Network& net);

}  // namespace relgrid
