#pragma once

#include <string>
#include <vector>

#include "relgrid/errors.hpp"
#include "relgrid/grid.hpp"

namespace relgrid {

/// Temperature-dependent capacity multipliers (fractions, not percent).
struct DeratingFactors {
  double line = 1.0;
  double dg = 1.0;
  double bess = 1.0;
};

/// Per-time-step energy prices in $ per p.u.-step.
struct Prices {
  double substation = 0.0;  // c0
  double dg = 0.0;
  double bess_charge = 0.0;
  double bess_discharge = 0.0;
  double dr = 0.0;
};

/// Per-unit cost of de-energized consumption/resources in the expected
/// failure cost ($ per p.u.).
struct ShedWeights {
  double substation = 0.0;  // w0
  double consumption = 0.0;  // w_c
  double dg = 0.0;
  double bess_charge = 0.0;
  double bess_discharge = 0.0;
  double dr = 0.0;

  bool all_zero() const {
    return substation == 0 && consumption == 0 && dg == 0 && bess_charge == 0 &&
           bess_discharge == 0 && dr == 0;
  }
};

class Scenario {
 public:
  int horizon() const { return static_cast<int>(ambient_temp.size()); }

  double step_hours = 2.0;
  // load[t][bus] in p.u.
  std::vector<std::vector<double>> load_p;
  std::vector<std::vector<double>> load_q;
  std::vector<Prices> prices;          // length T
  std::vector<double> ambient_temp;    // °C, length T
  std::vector<DeratingFactors> derate; // length T, derived from ambient_temp
  ShedWeights weights;

  /// Throws DimensionMismatch unless all series have length T and loads are
  /// consistent with the network size.
  void validate(const Network& net) const;
};

/// Scales base loads by profile(t)/max(profile); the peak step carries the
/// base load exactly.
std::vector<std::vector<double>> scale_loads(const std::vector<double>& base_load,
                                             const std::vector<double>& profile);

/// Capacity corrections as a function of ambient temperature: quadratic or
/// linear percent polynomials divided by 100.
DeratingFactors derating(double ambient_temp_c, double min_temp_c = -30.0,
                         double max_temp_c = 60.0);

/// Builds a scenario from a JSON file that references load and temperature
/// CSVs (columns: timestamp,<value>) and carries prices and weights.
Scenario load_scenario_json(const std::string& path, const Network& net);

}  // namespace relgrid
