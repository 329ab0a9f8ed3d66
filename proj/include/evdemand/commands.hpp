#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/demand_density.hpp"
#include "evdemand/epc_montecarlo.hpp"
#include "evdemand/estimators.hpp"
#include "evdemand/rate_curve.hpp"
#include "evdemand/run_config.hpp"
#include "evdemand/scenario.hpp"

namespace evdemand {

namespace cmd_detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(std::string("config: no ") + what + " given");
  if (!std::filesystem::exists(path)) throw Error(std::string(what) + " not found: " + path);
}

inline NetworkDataset load(const RunConfig& cfg, Diagnostics& diag) {
  for (const auto* p : {&cfg.tables.nodes, &cfg.tables.links, &cfg.tables.speeds, &cfg.tables.legs, &cfg.tables.routes})
    require_file(*p, "table");
  return load_dataset(cfg.tables, {cfg.strict}, diag);
}

inline RateCurve load_curve(const std::string& path, const char* what, CurveKind expected) {
  require_file(path, what);
  auto curve = curve_from_file(path);
  if (curve.kind() != expected)
    throw Error(path + ": expected a " + (expected == CurveKind::energy ? "energy" : "fuel") + " curve");
  return curve;
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace cmd_detail

struct GenResult {
  std::size_t nodes = 0, links = 0, legs = 0, persons = 0, epc_links = 0;
};

/// Writes the five tables plus epc_links.csv (central block) into `dir`.
inline GenResult cmd_gen(const ScenarioParams& params, const std::string& dir) {
  auto t = generate_scenario(params);
  write_scenario(t, dir);
  auto epc = central_links(t, params);
  std::string epc_csv = "link_id\n";
  for (auto id : epc) epc_csv += std::to_string(id) + '\n';
  csv::write_file((std::filesystem::path(dir) / "epc_links.csv").string(), epc_csv);
  return {t.nodes.size(), t.links.size(), t.legs.size(), static_cast<std::size_t>(params.n_persons), epc.size()};
}

struct ValidateResult {
  std::size_t nodes = 0, links = 0, profiles = 0, legs = 0, routes = 0, persons = 0;
  Diagnostics diagnostics;
};

inline ValidateResult cmd_validate(const RunConfig& cfg) {
  ValidateResult r;
  auto ds = cmd_detail::load(cfg, r.diagnostics);
  r.nodes = ds.nodes().size();
  r.links = ds.links().size();
  for (NetworkDataset::Index i = 0; i < ds.links().size(); ++i) r.profiles += ds.has_profile(i) ? 1 : 0;
  r.legs = ds.legs().size();
  r.routes = ds.route_count();
  r.persons = ds.persons().size();
  return r;
}

struct EstimateResult {
  std::vector<ComparisonRecord> records;
  ComparisonStats stats;
  Diagnostics diagnostics;
};

/// comparison.csv and estimate_summary.json in out_dir.
inline EstimateResult cmd_estimate(const RunConfig& cfg) {
  cfg.validate();
  EstimateResult r;
  auto curve = cmd_detail::load_curve(cfg.energy_curve, "energy curve", CurveKind::energy);
  auto ds = cmd_detail::load(cfg, r.diagnostics);
  r.records = estimate_all(ds, curve, cfg.traversal, cfg.workers, r.diagnostics);
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(r.records.size());
  for (const auto& rec : r.records) pairs.emplace_back(rec.rom_wh, rec.granular_wh);
  r.stats = compare_estimates(pairs, &r.diagnostics);

  csv::write_file(cmd_detail::out_path(cfg, "comparison.csv"), write_comparison_csv(r.records));
  nlohmann::json summary{{"n_trips", r.stats.n_trips},
                         {"skipped", r.stats.skipped},
                         {"mean_ratio", r.stats.mean_ratio},
                         {"fraction_within_band_0.2", r.stats.fraction_within_band(0.2)},
                         {"fraction_at_or_below_plus_0.2", r.stats.fraction_at_or_below(0.2)},
                         {"warnings", r.diagnostics.count}};
  csv::write_file(cmd_detail::out_path(cfg, "estimate_summary.json"), summary.dump(2) + "\n");
  return r;
}

struct DensityResult {
  std::vector<CrossingEvent> events;
  HexBinCounts counts;
  HexGrid grid;
  std::vector<std::string> files;
  Diagnostics diagnostics;
};

/// Per threshold: density_<T>wh.geojson and density_<T>wh.csv. Also
/// crossing_events.csv and density_summary.json.
inline DensityResult cmd_density(const RunConfig& cfg) {
  cfg.validate();
  DensityResult r;
  auto curve = cmd_detail::load_curve(cfg.energy_curve, "energy curve", CurveKind::energy);
  auto ds = cmd_detail::load(cfg, r.diagnostics);
  r.grid.origin = cfg.origin ? *cfg.origin : node_centroid(ds);
  r.grid.cell_size = cfg.cell_size;
  TrackOptions opts{cfg.traversal, cfg.per_leg_reset};
  r.events = track_all(ds, curve, cfg.thresholds, opts, cfg.workers);
  r.counts = aggregate_density(r.events, r.grid, cfg.thresholds);

  nlohmann::json layers = nlohmann::json::array();
  for (double t : cfg.thresholds.thresholds) {
    const auto layer = r.counts.only(t);
    const auto stem = "density_" + std::to_string(static_cast<long long>(std::llround(t))) + "wh";
    for (const char* fmt : {"geojson", "csv"}) {
      auto path = cmd_detail::out_path(cfg, stem + "." + fmt);
      csv::write_file(path, export_density(layer, r.grid, fmt));
      r.files.push_back(path);
    }
    layers.push_back({{"threshold_wh", t}, {"events", r.counts.total(t)}, {"cells", layer.layers.at(t).size()}});
  }
  csv::write_file(cmd_detail::out_path(cfg, "crossing_events.csv"), write_events_csv(r.events));
  nlohmann::json summary{{"persons", ds.persons().size()},
                         {"grid", {{"origin", {r.grid.origin.lon, r.grid.origin.lat}}, {"cell_size_m", r.grid.cell_size}}},
                         {"layers", layers}};
  csv::write_file(cmd_detail::out_path(cfg, "density_summary.json"), summary.dump(2) + "\n");
  return r;
}

struct EpcResult {
  SimulationSummary summary;
  Diagnostics diagnostics;
};

/// epc_summary.json and epc_iterations.csv in out_dir.
inline EpcResult cmd_epc(const RunConfig& cfg) {
  cfg.validate();
  EpcResult r;
  auto fuel = cmd_detail::load_curve(cfg.fuel_curve, "fuel curve", CurveKind::fuel);
  std::optional<RateCurve> energy;
  if (cfg.monte_carlo.apply_trip_energy_filter)
    energy = cmd_detail::load_curve(cfg.energy_curve, "energy curve", CurveKind::energy);
  cmd_detail::require_file(cfg.epc_links, "EPC link file");
  auto epc = load_epc_file(cfg.epc_links);
  auto ds = cmd_detail::load(cfg, r.diagnostics);
  validate_epc(epc, ds);
  auto prep = prepare_epc(ds, epc, cfg.monte_carlo, fuel, energy ? &*energy : nullptr, cfg.traversal, cfg.workers);
  r.summary = run_monte_carlo(prep, cfg.monte_carlo, cfg.workers);
  auto j = summary_json(r.summary);
  j["epc_label"] = epc.label;
  j["penetration"] = cfg.monte_carlo.penetration;
  j["seed"] = cfg.monte_carlo.seed;
  csv::write_file(cmd_detail::out_path(cfg, "epc_summary.json"), j.dump(2) + "\n");
  csv::write_file(cmd_detail::out_path(cfg, "epc_iterations.csv"), write_iterations_csv(r.summary));
  return r;
}

/// range_miles = capacity / rate(speed), one row per speed and capacity.
inline std::string cmd_range_table(const RateCurve& curve, const std::vector<double>& capacities_kwh,
                                   const std::vector<double>& speeds_mph) {
  if (curve.kind() != CurveKind::energy) throw Error("range table needs an energy curve");
  for (double c : capacities_kwh)
    if (!(c > 0.0)) throw Error("range table: capacity must be positive");
  std::string out = "speed_mph,speed_mps,capacity_kwh,range_miles\n";
  for (double mph : speeds_mph) {
    if (!(mph >= 0.0)) throw Error("range table: speed must be non-negative");
    const double mps = mph * units::kMpsPerMph;
    const double wh_per_m = curve.eval(mps);
    for (double cap : capacities_kwh) {
      const double miles = cap * 1000.0 / wh_per_m / units::kMetersPerMile;
      out += detail::format_double(mph) + ',' + detail::format_double(mps) + ',' + detail::format_double(cap) + ',' +
             detail::format_double(miles) + '\n';
    }
  }
  return out;
}

}  // namespace evdemand
