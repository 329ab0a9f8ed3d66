#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/estimators.hpp"
#include "evdemand/parallel.hpp"
#include "evdemand/random.hpp"
#include "evdemand/rate_curve.hpp"

namespace evdemand {

inline constexpr double kCo2TonsPerGallon = 0.008887;

/// Metric tons of CO2 from burning `liters` of gasoline.
inline double fuel_to_co2(double liters) {
  if (!(liters >= 0.0)) throw Error("fuel_to_co2: negative fuel volume");
  return liters / units::kLitersPerGallon * kCo2TonsPerGallon;
}

struct EpcLinkSet {
  std::string label;
  std::unordered_set<LinkId> link_ids;

  bool contains(LinkId id) const { return link_ids.contains(id); }
};

/// Throws if the set is empty or names links missing from the network.
inline void validate_epc(const EpcLinkSet& epc, const NetworkDataset& ds) {
  if (epc.link_ids.empty()) throw Error("EPC link set '" + epc.label + "' is empty");
  std::vector<LinkId> missing;
  for (auto id : epc.link_ids)
    if (!ds.find_link(id)) missing.push_back(id);
  if (missing.empty()) return;
  std::sort(missing.begin(), missing.end());
  std::string msg = "EPC links absent from network:";
  for (auto id : missing) msg += " " + std::to_string(id);
  throw Error(msg);
}

/// CSV with a link_id column, or a GeoJSON FeatureCollection whose features
/// carry properties.link_id.
inline EpcLinkSet load_epc_file(const std::string& path) {
  const auto text = csv::read_file(path);
  EpcLinkSet epc;
  epc.label = std::filesystem::path(path).stem().string();
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".geojson" || ext == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ": invalid JSON: " + e.what());
    }
    if (j.value("type", "") != "FeatureCollection" || !j.contains("features") || !j["features"].is_array())
      throw Error(path + ": expected a GeoJSON FeatureCollection");
    if (j.contains("name") && j["name"].is_string()) epc.label = j["name"].get<std::string>();
    for (const auto& f : j["features"]) {
      const auto props = f.value("properties", nlohmann::json::object());
      if (!props.contains("link_id") || !props["link_id"].is_number_integer())
        throw Error(path + ": feature without integer properties.link_id");
      epc.link_ids.insert(props["link_id"].get<LinkId>());
    }
  } else {
    for (const auto& row : csv::data_rows(text)) {
      auto f = csv::split(row.text);
      epc.link_ids.insert(csv::field<std::int64_t>(path, row, f[0], "link_id"));
    }
  }
  if (epc.link_ids.empty()) throw Error(path + ": EPC link set is empty");
  return epc;
}

enum class SamplingMode {
  /// Stream depends only on (seed, iteration): samples at a lower penetration
  /// are prefixes of samples at a higher one.
  nested,
  /// Penetration is mixed into the stream as well.
  independent,
};

struct MonteCarloConfig {
  double penetration = 0.37;
  double max_total_miles = 300.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 20240601;
  std::size_t histogram_bins = 30;
  SamplingMode sampling = SamplingMode::nested;
  /// Count only fuel burned on EPC links instead of the whole trip.
  bool epc_segment_only = false;
  /// Additionally require trip energy >= min_trip_energy_wh (needs an energy curve).
  bool apply_trip_energy_filter = false;
  double min_trip_energy_wh = 10000.0;

  void validate() const {
    if (!(penetration >= 0.0 && penetration <= 1.0)) throw Error("monte carlo: penetration must be in [0, 1]");
    if (iterations < 1) throw Error("monte carlo: iterations must be >= 1");
    if (!(max_total_miles > 0.0)) throw Error("monte carlo: max_total_miles must be positive");
    if (histogram_bins < 1) throw Error("monte carlo: histogram_bins must be >= 1");
  }
};

/// Sum of a person's routed leg lengths, in miles.
inline double person_total_distance(const NetworkDataset& ds, PersonId person, Diagnostics* diag = nullptr) {
  auto it = ds.persons().find(person);
  if (it == ds.persons().end()) {
    if (diag) diag->warn("person " + std::to_string(person) + " has no legs");
    return 0.0;
  }
  double meters = 0.0;
  bool any = false;
  for (auto leg : it->second) {
    if (!ds.has_route(leg)) continue;
    meters += route_length(ds, leg);
    any = true;
  }
  if (!any && diag) diag->warn("person " + std::to_string(person) + " has no routed legs");
  return meters / units::kMetersPerMile;
}

/// Persons whose daily distance is at most max_total_miles, ascending by id.
inline std::vector<PersonId> eligible_persons(const NetworkDataset& ds, const MonteCarloConfig& cfg) {
  std::vector<PersonId> out;
  for (const auto& [id, _] : ds.persons())
    if (person_total_distance(ds, id) <= cfg.max_total_miles) out.push_back(id);
  return out;
}

inline bool trip_passes_epc(std::span<const LinkId> route, const EpcLinkSet& epc) {
  return std::any_of(route.begin(), route.end(), [&](LinkId id) { return epc.contains(id); });
}

/// Granular fuel (liters) for a leg; with `epc` set only EPC links count.
inline double trip_fuel(const NetworkDataset& ds, LegId leg_id, const RateCurve& fuel_curve,
                        const TraversalOptions& opts = {}, const EpcLinkSet* epc = nullptr) {
  auto idx = routed_leg(ds, leg_id);
  double liters = 0.0;
  walk_links(ds, ds.route(idx), ds.legs()[idx].start_time, fuel_curve, opts, [&](auto, const LinkTraversal& t) {
    if (!epc || epc->contains(t.link_id)) liters += t.energy;
  });
  return liters;
}

/// Per-person EPC fuel, computed once and shared by all iterations.
struct EpcPrepared {
  std::vector<PersonId> eligible;
  std::vector<double> person_fuel;                  // liters, parallel to `eligible`
  std::vector<std::size_t> person_trips;            // qualifying trips, parallel to `eligible`
  double total_fuel = 0.0;                          // over all eligible persons
};

inline EpcPrepared prepare_epc(const NetworkDataset& ds, const EpcLinkSet& epc, const MonteCarloConfig& cfg,
                               const RateCurve& fuel_curve, const RateCurve* energy_curve = nullptr,
                               const TraversalOptions& opts = {}, std::size_t workers = 1) {
  cfg.validate();
  if (cfg.apply_trip_energy_filter && !energy_curve)
    throw Error("monte carlo: trip energy filter requires an energy curve");
  EpcPrepared p;
  p.eligible = eligible_persons(ds, cfg);
  p.person_fuel.assign(p.eligible.size(), 0.0);
  p.person_trips.assign(p.eligible.size(), 0);
  parallel_for(p.eligible.size(), workers, [&](std::size_t k) {
    for (auto leg_idx : ds.persons().at(p.eligible[k])) {
      if (!ds.has_route(leg_idx)) continue;
      auto route = ds.route(leg_idx);
      bool passes = std::any_of(route.begin(), route.end(),
                                [&](auto li) { return epc.contains(ds.links()[li].id); });
      if (!passes) continue;
      if (cfg.apply_trip_energy_filter &&
          granular_totals(ds, leg_idx, *energy_curve, opts).energy < cfg.min_trip_energy_wh)
        continue;
      p.person_fuel[k] += trip_fuel(ds, ds.legs()[leg_idx].id, fuel_curve, opts,
                                    cfg.epc_segment_only ? &epc : nullptr);
      ++p.person_trips[k];
    }
  });
  for (double f : p.person_fuel) p.total_fuel += f;
  return p;
}

struct IterationResult {
  std::size_t iteration = 0;
  std::size_t ev_person_count = 0;
  std::size_t qualifying_trip_count = 0;
  double fuel_removed = 0.0;  // liters
  std::vector<PersonId> sampled;
};

namespace detail {

inline std::mt19937_64 iteration_stream(const MonteCarloConfig& cfg, std::size_t iteration) {
  std::uint64_t key = splitmix64(cfg.seed) ^ splitmix64(0xA5A5A5A5ULL + iteration);
  if (cfg.sampling == SamplingMode::independent) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(cfg.penetration));
    std::memcpy(&bits, &cfg.penetration, sizeof(bits));
    key ^= splitmix64(bits);
  }
  return std::mt19937_64(splitmix64(key));
}

}  // namespace detail

/// floor(p * n). The tiny epsilon keeps 0.29 * 100 from landing on 28.
inline std::size_t ev_count(double penetration, std::size_t n) {
  return static_cast<std::size_t>(std::floor(penetration * static_cast<double>(n) + 1e-9));
}

inline IterationResult run_iteration(const EpcPrepared& prep, const MonteCarloConfig& cfg, std::size_t iteration) {
  const std::size_t n = prep.eligible.size();
  if (n == 0) throw Error("monte carlo: no eligible persons");
  const std::size_t k = std::min(n, ev_count(cfg.penetration, n));
  auto rng = detail::iteration_stream(cfg, iteration);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  IterationResult r;
  r.iteration = iteration;
  r.ev_person_count = k;
  r.sampled.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(detail::bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
    r.sampled.push_back(prep.eligible[idx[i]]);
  }
  // Sum in eligible order so the total depends on the set drawn, not the draw
  // order: p = 1 reproduces total_fuel bit for bit.
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t i = 0; i < k; ++i) {
    r.fuel_removed += prep.person_fuel[idx[i]];
    r.qualifying_trip_count += prep.person_trips[idx[i]];
  }
  return r;
}

inline IterationResult run_iteration(const NetworkDataset& ds, const EpcLinkSet& epc, const MonteCarloConfig& cfg,
                                     const RateCurve& fuel_curve, std::size_t iteration) {
  return run_iteration(prepare_epc(ds, epc, cfg, fuel_curve), cfg, iteration);
}

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the last bin is closed.
inline Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b)
    h.edges.push_back(b == bins ? hi : lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  for (double v : values) {
    std::size_t b = 0;
    if (hi > lo) b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins)));
    ++h.counts[b];
  }
  return h;
}

struct SimulationSummary {
  std::vector<IterationResult> iterations;  // sorted by index
  double mean_liters = 0.0;
  double std_liters = 0.0;  // sample standard deviation
  double min_liters = 0.0;
  double max_liters = 0.0;
  Histogram histogram;
  double mean_co2_tons = 0.0;               // fuel_to_co2(mean_liters)
  double co2_distribution_mean_tons = 0.0;  // mean of per-iteration CO2
  std::size_t eligible_persons = 0;
  double total_eligible_fuel = 0.0;
};

inline SimulationSummary summarize(std::vector<IterationResult> results, const MonteCarloConfig& cfg) {
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.iteration < b.iteration; });
  SimulationSummary s;
  std::vector<double> fuel;
  fuel.reserve(results.size());
  for (const auto& r : results) fuel.push_back(r.fuel_removed);
  s.iterations = std::move(results);
  if (fuel.empty()) return s;
  double sum = 0.0, co2 = 0.0;
  for (double f : fuel) {
    sum += f;
    co2 += fuel_to_co2(f);
  }
  const auto n = static_cast<double>(fuel.size());
  auto [lo, hi] = std::minmax_element(fuel.begin(), fuel.end());
  s.min_liters = *lo;
  s.max_liters = *hi;
  // A constant sample (p = 0 or 1) gets its value and zero spread exactly;
  // sum / n would leave rounding residue in both.
  s.mean_liters = *lo == *hi ? *lo : sum / n;
  double ss = 0.0;
  for (double f : fuel) ss += (f - s.mean_liters) * (f - s.mean_liters);
  s.std_liters = fuel.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.histogram = make_histogram(fuel, cfg.histogram_bins);
  s.mean_co2_tons = fuel_to_co2(s.mean_liters);
  s.co2_distribution_mean_tons = co2 / n;
  return s;
}

inline SimulationSummary run_monte_carlo(const EpcPrepared& prep, const MonteCarloConfig& cfg,
                                         std::size_t workers = 1) {
  cfg.validate();
  if (prep.eligible.empty()) throw Error("monte carlo: no eligible persons");
  std::vector<IterationResult> results(cfg.iterations);
  parallel_for(cfg.iterations, workers, [&](std::size_t i) {
    results[i] = run_iteration(prep, cfg, i);
    results[i].sampled.clear();
    results[i].sampled.shrink_to_fit();
  }, 8);
  auto s = summarize(std::move(results), cfg);
  s.eligible_persons = prep.eligible.size();
  s.total_eligible_fuel = prep.total_fuel;
  return s;
}

inline SimulationSummary run_monte_carlo(const NetworkDataset& ds, const EpcLinkSet& epc,
                                         const MonteCarloConfig& cfg, const RateCurve& fuel_curve,
                                         std::size_t workers = 1) {
  validate_epc(epc, ds);
  return run_monte_carlo(prepare_epc(ds, epc, cfg, fuel_curve, nullptr, {}, workers), cfg, workers);
}

inline nlohmann::json summary_json(const SimulationSummary& s) {
  return {{"mean_liters", s.mean_liters},
          {"std_liters", s.std_liters},
          {"min", s.min_liters},
          {"max", s.max_liters},
          {"histogram", {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}}},
          {"mean_co2_tons", s.mean_co2_tons},
          {"co2_distribution_mean_tons", s.co2_distribution_mean_tons},
          {"iterations", s.iterations.size()},
          {"eligible_persons", s.eligible_persons},
          {"total_eligible_fuel_liters", s.total_eligible_fuel}};
}

inline std::string write_iterations_csv(const SimulationSummary& s) {
  std::string out = "iteration,ev_person_count,qualifying_trip_count,fuel_removed_liters,co2_removed_tons\n";
  for (const auto& r : s.iterations) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.ev_person_count) + ',' +
           std::to_string(r.qualifying_trip_count) + ',' + detail::format_double(r.fuel_removed) + ',' +
           detail::format_double(fuel_to_co2(r.fuel_removed)) + '\n';
  }
  return out;
}

}  // namespace evdemand
