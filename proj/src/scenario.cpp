#include "relgrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "relgrid/runio.hpp"

namespace relgrid {

using nlohmann::json;

void Scenario::validate(const Network& net) const {
  const int T = horizon();
  if (T <= 0) throw EmptyProfile("scenario has no time steps");
  auto need = [T](size_t got, const char* what) {
    if (static_cast<int>(got) != T)
      throw DimensionMismatch(std::string(what) + " has " + std::to_string(got) +
                              " entries, expected " + std::to_string(T));
  };
  need(load_p.size(), "active load series");
  need(load_q.size(), "reactive load series");
  need(prices.size(), "price series");
  need(derate.size(), "derating series");
  if (!(step_hours > 0)) throw InputError("step_hours must be > 0");
  const size_t n = static_cast<size_t>(net.bus_count());
  for (int t = 0; t < T; ++t) {
    if (load_p[t].size() != n || load_q[t].size() != n)
      throw DimensionMismatch("load vector at step " + std::to_string(t) +
                              " does not match the bus count");
    for (size_t i = 0; i < n; ++i)
      if (load_p[t][i] < 0 || load_q[t][i] < 0)
        throw InputError("negative load at bus " + std::to_string(i) + ", step " +
                         std::to_string(t));
  }
}

std::vector<std::vector<double>> scale_loads(const std::vector<double>& base_load,
                                             const std::vector<double>& profile) {
  if (profile.empty()) throw EmptyProfile("load profile is empty");
  double peak = *std::max_element(profile.begin(), profile.end());
  if (!(peak > 0)) throw NonPositiveMax("load profile peak must be > 0");
  std::vector<std::vector<double>> out(profile.size());
  for (size_t t = 0; t < profile.size(); ++t) {
    out[t].resize(base_load.size());
    for (size_t i = 0; i < base_load.size(); ++i)
      out[t][i] = base_load[i] * profile[t] / peak;
  }
  return out;
}

DeratingFactors derating(double ambient_temp_c, double min_temp_c, double max_temp_c) {
  if (!(ambient_temp_c >= min_temp_c && ambient_temp_c <= max_temp_c))
    throw TemperatureOutOfRange("ambient temperature " + std::to_string(ambient_temp_c) +
                                " °C outside [" + std::to_string(min_temp_c) + ", " +
                                std::to_string(max_temp_c) + "]");
  const double at = ambient_temp_c;
  DeratingFactors f;
  f.line = (-0.77 * at + 119.45) / 100.0;
  f.dg = (-0.47 * at + 111.60) / 100.0;
  f.bess = (-0.016 * at * at + 1.97 * at + 60.75) / 100.0;
  return f;
}

namespace {

// Single-value column CSV (timestamp,value). When the series spans several
// whole days of T steps, the per-step positions are averaged into one day.
std::vector<double> read_series_csv(const std::string& path, int steps_hint) {
  CsvTable table = read_csv(path, /*has_header=*/true);
  std::vector<double> raw;
  raw.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() < 2)
      throw InputError("row " + std::to_string(r + 1) + " of " + path +
                       " needs timestamp,value");
    raw.push_back(parse_double(row.back(), path + " row " + std::to_string(r + 1)));
  }
  if (raw.empty()) throw EmptyProfile("no data rows in " + path);
  if (steps_hint <= 0 || static_cast<int>(raw.size()) == steps_hint) return raw;
  if (raw.size() % static_cast<size_t>(steps_hint) != 0)
    throw DimensionMismatch(path + " has " + std::to_string(raw.size()) +
                            " rows, not a whole number of " + std::to_string(steps_hint) +
                            "-step days");
  const size_t days = raw.size() / static_cast<size_t>(steps_hint);
  std::vector<double> avg(steps_hint, 0.0);
  for (size_t r = 0; r < raw.size(); ++r) avg[r % steps_hint] += raw[r] / double(days);
  return avg;
}

std::vector<double> series_field(const json& j, const char* key, int T, double fallback) {
  if (!j.contains(key)) return std::vector<double>(T, fallback);
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(T, v.get<double>());
  std::vector<double> out = v.get<std::vector<double>>();
  if (static_cast<int>(out.size()) != T)
    throw DimensionMismatch(std::string(key) + " has " + std::to_string(out.size()) +
                            " entries, expected " + std::to_string(T));
  return out;
}

}  // namespace

Scenario load_scenario_json(const std::string& path, const Network& net) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InputError("cannot parse scenario JSON " + path + ": " + e.what());
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&dir](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (dir / fp).string();
  };
  try {
    Scenario sc;
    sc.step_hours = doc.value("step_hours", 2.0);
    const int T = doc.value("horizon", 12);

    std::vector<double> temps;
    if (doc.contains("temperature_csv"))
      temps = read_series_csv(resolve(doc.at("temperature_csv").get<std::string>()), T);
    else
      temps = doc.at("ambient_temp").get<std::vector<double>>();
    if (static_cast<int>(temps.size()) != T)
      throw DimensionMismatch("temperature series has " + std::to_string(temps.size()) +
                              " entries, expected " + std::to_string(T));
    sc.ambient_temp = temps;
    const double tmin = doc.value("min_temp_c", -30.0);
    const double tmax = doc.value("max_temp_c", 60.0);
    for (double at : sc.ambient_temp) sc.derate.push_back(derating(at, tmin, tmax));

    std::vector<double> profile;
    if (doc.contains("load_profile_csv"))
      profile = read_series_csv(resolve(doc.at("load_profile_csv").get<std::string>()), T);
    else
      profile = doc.at("load_profile").get<std::vector<double>>();
    if (static_cast<int>(profile.size()) != T)
      throw DimensionMismatch("load profile has " + std::to_string(profile.size()) +
                              " entries, expected " + std::to_string(T));
    std::vector<double> base_p, base_q;
    for (const auto& b : net.buses()) {
      base_p.push_back(b.base_load_p);
      base_q.push_back(b.base_load_q);
    }
    sc.load_p = scale_loads(base_p, profile);
    sc.load_q = scale_loads(base_q, profile);

    const json jp = doc.value("prices", json::object());
    auto sub = series_field(jp, "substation", T, 0.0);
    auto dg = series_field(jp, "dg", T, 0.0);
    auto bc = series_field(jp, "bess_charge", T, 0.0);
    auto bd = series_field(jp, "bess_discharge", T, 0.0);
    auto dr = series_field(jp, "dr", T, 0.0);
    sc.prices.resize(T);
    for (int t = 0; t < T; ++t)
      sc.prices[t] = Prices{sub[t], dg[t], bc[t], bd[t], dr[t]};

    const json jw = doc.value("weights", json::object());
    sc.weights.substation = jw.value("substation", 0.0);
    sc.weights.consumption = jw.value("consumption", 0.0);
    sc.weights.dg = jw.value("dg", 0.0);
    sc.weights.bess_charge = jw.value("bess_charge", 0.0);
    sc.weights.bess_discharge = jw.value("bess_discharge", 0.0);
    sc.weights.dr = jw.value("dr", 0.0);

    sc.validate(net);
    return sc;
  } catch (const json::exception& e) {
    throw InputError("malformed scenario JSON " + path + ": " + e.what());
  }
}

}  // namespace relgrid
