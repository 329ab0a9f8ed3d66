#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/demand_density.hpp"
#include "evdemand/epc_montecarlo.hpp"
#include "evdemand/scenario.hpp"

namespace evdemand {

struct RunConfig {
  TablePaths tables = TablePaths::in_directory("scenario");
  std::string energy_curve;
  std::string fuel_curve;
  std::string epc_links;
  std::string out_dir = "out";
  bool strict = false;
  std::size_t workers = 1;

  TraversalOptions traversal;
  ThresholdConfig thresholds;
  double cell_size = 1000.0;
  std::optional<LonLat> origin;  // defaults to the node centroid
  bool per_leg_reset = false;

  MonteCarloConfig monte_carlo;
  ScenarioParams scenario;

  std::vector<double> capacities_kwh{40.0, 60.0, 75.0, 100.0};
  std::vector<double> range_speeds_mph{10, 20, 30, 40, 50, 60, 70, 80};

  void validate() const {
    if (workers < 1) throw Error("config: workers must be >= 1");
    if (!(cell_size > 0.0)) throw Error("config: density.cell_size_m must be positive");
    if (!(traversal.min_speed > 0.0)) throw Error("config: min_speed_mps must be positive");
    thresholds.validate();
    monte_carlo.validate();
  }
};

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("config: unknown field '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config: field '" + where + (where.empty() ? "" : ".") + key + "' has the wrong type");
  }
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline LonLat read_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error("config: field '" + where + "' must be [lon, lat]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace config_detail

/// Parses a run config. Relative paths resolve against `base_dir`.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using namespace config_detail;
  RunConfig c;
  check_keys(j, "", {"data_dir", "tables", "energy_curve", "fuel_curve", "epc_links", "out_dir", "strict", "workers",
                     "min_speed_mps", "density", "monte_carlo", "scenario", "range_table"});
  std::string data_dir = "scenario";
  read(j, "data_dir", data_dir, "");
  c.tables = TablePaths::in_directory(resolve(base_dir, data_dir));
  if (j.contains("tables")) {
    const auto& t = j["tables"];
    check_keys(t, "tables", {"nodes", "links", "speeds", "legs", "routes"});
    for (auto [key, dest] : {std::pair{"nodes", &c.tables.nodes}, std::pair{"links", &c.tables.links},
                             std::pair{"speeds", &c.tables.speeds}, std::pair{"legs", &c.tables.legs},
                             std::pair{"routes", &c.tables.routes}}) {
      std::string v;
      read(t, key, v, "tables");
      if (!v.empty()) *dest = resolve(base_dir, v);
    }
  }
  read(j, "energy_curve", c.energy_curve, "");
  read(j, "fuel_curve", c.fuel_curve, "");
  read(j, "epc_links", c.epc_links, "");
  read(j, "out_dir", c.out_dir, "");
  c.energy_curve = resolve(base_dir, c.energy_curve);
  c.fuel_curve = resolve(base_dir, c.fuel_curve);
  c.epc_links = resolve(base_dir, c.epc_links);
  c.out_dir = resolve(base_dir, c.out_dir);
  read(j, "strict", c.strict, "");
  read(j, "workers", c.workers, "");
  read(j, "min_speed_mps", c.traversal.min_speed, "");

  if (j.contains("density")) {
    const auto& d = j["density"];
    check_keys(d, "density", {"thresholds_wh", "cell_size_m", "origin", "per_leg_reset"});
    read(d, "thresholds_wh", c.thresholds.thresholds, "density");
    read(d, "cell_size_m", c.cell_size, "density");
    read(d, "per_leg_reset", c.per_leg_reset, "density");
    if (d.contains("origin")) c.origin = read_point(d["origin"], "density.origin");
  }
  if (j.contains("monte_carlo")) {
    const auto& m = j["monte_carlo"];
    check_keys(m, "monte_carlo", {"penetration", "max_total_miles", "iterations", "seed", "histogram_bins",
                                  "sampling", "epc_segment_only", "apply_trip_energy_filter", "min_trip_energy_wh"});
    auto& mc = c.monte_carlo;
    read(m, "penetration", mc.penetration, "monte_carlo");
    read(m, "max_total_miles", mc.max_total_miles, "monte_carlo");
    read(m, "iterations", mc.iterations, "monte_carlo");
    read(m, "seed", mc.seed, "monte_carlo");
    read(m, "histogram_bins", mc.histogram_bins, "monte_carlo");
    read(m, "epc_segment_only", mc.epc_segment_only, "monte_carlo");
    read(m, "apply_trip_energy_filter", mc.apply_trip_energy_filter, "monte_carlo");
    read(m, "min_trip_energy_wh", mc.min_trip_energy_wh, "monte_carlo");
    std::string sampling = "nested";
    read(m, "sampling", sampling, "monte_carlo");
    if (sampling == "nested") mc.sampling = SamplingMode::nested;
    else if (sampling == "independent") mc.sampling = SamplingMode::independent;
    else throw Error("config: field 'monte_carlo.sampling' must be 'nested' or 'independent'");
  }
  if (j.contains("scenario")) {
    const auto& s = j["scenario"];
    check_keys(s, "scenario", {"rows", "cols", "link_length_m", "free_speed_mps", "arterial_speed_mps",
                               "arterial_every", "n_persons", "min_legs", "max_legs", "peaks", "congested_share",
                               "origin", "seed"});
    auto& p = c.scenario;
    read(s, "rows", p.rows, "scenario");
    read(s, "cols", p.cols, "scenario");
    read(s, "link_length_m", p.link_length, "scenario");
    read(s, "free_speed_mps", p.free_speed, "scenario");
    read(s, "arterial_speed_mps", p.arterial_speed, "scenario");
    read(s, "arterial_every", p.arterial_every, "scenario");
    read(s, "n_persons", p.n_persons, "scenario");
    read(s, "min_legs", p.min_legs, "scenario");
    read(s, "max_legs", p.max_legs, "scenario");
    read(s, "congested_share", p.congested_share, "scenario");
    read(s, "seed", p.seed, "scenario");
    if (s.contains("origin")) {
      auto o = read_point(s["origin"], "scenario.origin");
      p.origin_lon = o.lon;
      p.origin_lat = o.lat;
    }
    if (s.contains("peaks")) {
      if (!s["peaks"].is_array()) throw Error("config: field 'scenario.peaks' must be an array");
      p.peaks.clear();
      for (const auto& pk : s["peaks"]) {
        check_keys(pk, "scenario.peaks[]", {"center_bin", "half_width", "factor"});
        CongestionPeak peak;
        read(pk, "center_bin", peak.center_bin, "scenario.peaks[]");
        read(pk, "half_width", peak.half_width, "scenario.peaks[]");
        read(pk, "factor", peak.factor, "scenario.peaks[]");
        p.peaks.push_back(peak);
      }
    }
  }
  if (j.contains("range_table")) {
    const auto& r = j["range_table"];
    check_keys(r, "range_table", {"capacities_kwh", "speeds_mph"});
    read(r, "capacities_kwh", c.capacities_kwh, "range_table");
    read(r, "speeds_mph", c.range_speeds_mph, "range_table");
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid JSON: " + e.what());
  }
  try {
    return parse_run_config(j, std::filesystem::path(path).parent_path());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace evdemand
