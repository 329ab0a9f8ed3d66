#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/estimators.hpp"
#include "evdemand/parallel.hpp"
#include "evdemand/rate_curve.hpp"

namespace evdemand {

struct ThresholdConfig {
  std::vector<double> thresholds{10000.0, 20000.0, 30000.0, 40000.0, 50000.0};  // Wh

  void validate() const {
    if (thresholds.empty()) throw Error("thresholds: list is empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0)) throw Error("thresholds: values must be positive");
      if (i && !(thresholds[i] > thresholds[i - 1])) throw Error("thresholds: values must be strictly ascending");
    }
  }
};

struct CrossingEvent {
  PersonId person = 0;
  LegId leg_id = 0;
  double threshold = 0.0;  // Wh
  LinkId link_id = 0;
  double lon = 0.0;  // downstream node of the crossing link
  double lat = 0.0;
  double clock = 0.0;              // link entry time
  double cumulative_energy = 0.0;  // Wh, right after the crossing link
  double cumulative_before = 0.0;  // Wh, right before it
};

struct TrackOptions {
  TraversalOptions traversal;
  /// Restart the energy tally at every leg (sensitivity mode). Each leg can then
  /// contribute one event per threshold.
  bool per_leg_reset = false;
};

/// Follows a person's legs in chronological order and records the first link
/// at which cumulative energy reaches each threshold. Legs without a route
/// are skipped.
inline std::vector<CrossingEvent> track_person(const NetworkDataset& ds, PersonId person, const RateCurve& curve,
                                               const ThresholdConfig& cfg, const TrackOptions& opts = {}) {
  std::vector<CrossingEvent> events;
  const auto& thresholds = cfg.thresholds;
  double cumulative = 0.0;
  std::size_t next = 0;
  for (auto leg_idx : ds.person_legs(person)) {
    if (!ds.has_route(leg_idx)) continue;
    const auto& leg = ds.legs()[leg_idx];
    if (opts.per_leg_reset) {
      cumulative = 0.0;
      next = 0;
    }
    if (next == thresholds.size()) break;
    walk_links(ds, ds.route(leg_idx), leg.start_time, curve, opts.traversal,
               [&](NetworkDataset::Index li, const LinkTraversal& t) {
                 const double before = cumulative;
                 cumulative += t.energy;
                 while (next < thresholds.size() && cumulative >= thresholds[next]) {
                   const auto& node = ds.node_out(li);
                   events.push_back({person, leg.id, thresholds[next], t.link_id, node.lon, node.lat, t.entry_time,
                                     cumulative, before});
                   ++next;
                 }
               });
  }
  return events;
}

/// Events for every person, ordered by person_id then threshold.
inline std::vector<CrossingEvent> track_all(const NetworkDataset& ds, const RateCurve& curve,
                                            const ThresholdConfig& cfg, const TrackOptions& opts,
                                            std::size_t workers) {
  cfg.validate();
  std::vector<PersonId> persons;
  persons.reserve(ds.persons().size());
  for (const auto& [id, _] : ds.persons()) persons.push_back(id);
  std::vector<std::vector<CrossingEvent>> per_person(persons.size());
  parallel_for(persons.size(), workers,
               [&](std::size_t k) { per_person[k] = track_person(ds, persons[k], curve, cfg, opts); });
  std::vector<CrossingEvent> events;
  for (auto& v : per_person) events.insert(events.end(), v.begin(), v.end());
  return events;
}

// ---------------------------------------------------------------------------
// Projection and hexagonal grid

inline constexpr double kMetersPerDegree = 111320.0;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

struct XY {
  double x = 0.0;
  double y = 0.0;
};

/// Equirectangular projection about `origin`, in meters.
inline XY project_to_local(LonLat p, LonLat origin) {
  const double c = std::cos(origin.lat * std::numbers::pi / 180.0);
  return {(p.lon - origin.lon) * c * kMetersPerDegree, (p.lat - origin.lat) * kMetersPerDegree};
}

inline LonLat unproject(XY p, LonLat origin) {
  const double c = std::cos(origin.lat * std::numbers::pi / 180.0);
  return {origin.lon + p.x / (c * kMetersPerDegree), origin.lat + p.y / kMetersPerDegree};
}

/// Pointy-top hexagons; `cell_size` is the flat-to-flat width in meters.
struct HexGrid {
  LonLat origin;
  double cell_size = 1000.0;

  double circumradius() const { return cell_size / std::numbers::sqrt3; }
};

struct HexCoord {
  std::int64_t q = 0;
  std::int64_t r = 0;
  auto operator<=>(const HexCoord&) const = default;
};

inline constexpr std::array<HexCoord, 6> kHexNeighbors{{{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}}};

inline XY hex_center(HexCoord h, const HexGrid& grid) {
  const double R = grid.circumradius();
  return {R * std::numbers::sqrt3 * (static_cast<double>(h.q) + static_cast<double>(h.r) / 2.0),
          R * 1.5 * static_cast<double>(h.r)};
}

/// Cell whose center is nearest to `p`. Exact ties go to the lexicographically
/// smaller (q, r).
inline HexCoord hex_index(XY p, const HexGrid& grid) {
  const double R = grid.circumradius();
  const double fq = (std::numbers::sqrt3 / 3.0 * p.x - p.y / 3.0) / R;
  const double fr = (2.0 / 3.0 * p.y) / R;
  const double fs = -fq - fr;
  double rq = std::round(fq), rr = std::round(fr), rs = std::round(fs);
  const double dq = std::abs(rq - fq), dr = std::abs(rr - fr), ds = std::abs(rs - fs);
  if (dq > dr && dq > ds) rq = -rr - rs;
  else if (dr > ds) rr = -rq - rs;
  const HexCoord guess{static_cast<std::int64_t>(rq), static_cast<std::int64_t>(rr)};

  auto dist2 = [&](HexCoord h) {
    auto c = hex_center(h, grid);
    return (c.x - p.x) * (c.x - p.x) + (c.y - p.y) * (c.y - p.y);
  };
  HexCoord best = guess;
  double best_d = dist2(guess);
  for (auto n : kHexNeighbors) {
    HexCoord h{guess.q + n.q, guess.r + n.r};
    double d = dist2(h);
    if (d < best_d || (d == best_d && h < best)) {
      best = h;
      best_d = d;
    }
  }
  return best;
}

/// Closed ring of 7 lon/lat vertices around a cell.
inline std::vector<LonLat> hex_ring(HexCoord h, const HexGrid& grid) {
  const auto c = hex_center(h, grid);
  const double R = grid.circumradius();
  std::vector<LonLat> ring;
  for (int i = 0; i < 6; ++i) {
    const double a = (60.0 * i - 30.0) * std::numbers::pi / 180.0;
    ring.push_back(unproject({c.x + R * std::cos(a), c.y + R * std::sin(a)}, grid.origin));
  }
  ring.push_back(ring.front());
  return ring;
}

/// Mean of all node coordinates.
inline LonLat node_centroid(const NetworkDataset& ds) {
  LonLat c;
  if (ds.nodes().empty()) return c;
  for (const auto& n : ds.nodes()) {
    c.lon += n.lon;
    c.lat += n.lat;
  }
  const auto n = static_cast<double>(ds.nodes().size());
  return {c.lon / n, c.lat / n};
}

// ---------------------------------------------------------------------------
// Aggregation and export

struct HexBinCounts {
  std::map<double, std::map<HexCoord, std::int64_t>> layers;  // threshold Wh -> cell -> count

  std::int64_t total(double threshold) const {
    auto it = layers.find(threshold);
    if (it == layers.end()) return 0;
    std::int64_t s = 0;
    for (const auto& [_, c] : it->second) s += c;
    return s;
  }

  HexBinCounts only(double threshold) const {
    HexBinCounts out;
    auto it = layers.find(threshold);
    out.layers[threshold] = it == layers.end() ? std::map<HexCoord, std::int64_t>{} : it->second;
    return out;
  }

  bool operator==(const HexBinCounts&) const = default;
};

inline HexBinCounts aggregate_density(std::span<const CrossingEvent> events, const HexGrid& grid) {
  HexBinCounts counts;
  for (const auto& e : events) {
    auto cell = hex_index(project_to_local({e.lon, e.lat}, grid.origin), grid);
    ++counts.layers[e.threshold][cell];
  }
  return counts;
}

/// Same as above but every configured threshold gets a layer, empty or not.
inline HexBinCounts aggregate_density(std::span<const CrossingEvent> events, const HexGrid& grid,
                                      const ThresholdConfig& cfg) {
  auto counts = aggregate_density(events, grid);
  for (double t : cfg.thresholds) counts.layers.try_emplace(t);
  return counts;
}

inline nlohmann::json density_geojson(const HexBinCounts& counts, const HexGrid& grid) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& [threshold, cells] : counts.layers) {
    for (const auto& [cell, count] : cells) {
      nlohmann::json ring = nlohmann::json::array();
      for (const auto& v : hex_ring(cell, grid)) ring.push_back({v.lon, v.lat});
      features.push_back({{"type", "Feature"},
                          {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}},
                          {"properties", {{"threshold_wh", threshold}, {"count", count}, {"q", cell.q}, {"r", cell.r}}}});
    }
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

inline std::string density_csv(const HexBinCounts& counts, const HexGrid& grid) {
  std::string out = "threshold_wh,q,r,center_lon,center_lat,count\n";
  for (const auto& [threshold, cells] : counts.layers) {
    for (const auto& [cell, count] : cells) {
      auto c = unproject(hex_center(cell, grid), grid.origin);
      out += detail::format_double(threshold) + ',' + std::to_string(cell.q) + ',' + std::to_string(cell.r) + ',' +
             detail::format_double(c.lon) + ',' + detail::format_double(c.lat) + ',' + std::to_string(count) + '\n';
    }
  }
  return out;
}

/// `format` is "geojson" or "csv".
inline std::string export_density(const HexBinCounts& counts, const HexGrid& grid, std::string_view format) {
  if (format == "geojson") return density_geojson(counts, grid).dump();
  if (format == "csv") return density_csv(counts, grid);
  throw Error("unknown density export format '" + std::string(format) + "'");
}

inline HexBinCounts parse_density_csv(std::string_view text) {
  constexpr std::string_view table = "density";
  HexBinCounts counts;
  for (const auto& row : csv::data_rows(text)) {
    auto f = csv::split(row.text);
    if (f.size() != 6) csv::fail(table, row.index, "expected 6 columns");
    auto t = csv::field<double>(table, row, f[0], "threshold_wh");
    HexCoord h{csv::field<std::int64_t>(table, row, f[1], "q"), csv::field<std::int64_t>(table, row, f[2], "r")};
    counts.layers[t][h] += csv::field<std::int64_t>(table, row, f[5], "count");
  }
  return counts;
}

inline std::string write_events_csv(std::span<const CrossingEvent> events) {
  std::string out = "person_id,leg_id,threshold_wh,link_id,lon,lat,clock_s,cumulative_wh\n";
  for (const auto& e : events) {
    out += std::to_string(e.person) + ',' + std::to_string(e.leg_id) + ',' + detail::format_double(e.threshold) +
           ',' + std::to_string(e.link_id) + ',' + detail::format_double(e.lon) + ',' + detail::format_double(e.lat) +
           ',' + detail::format_double(e.clock) + ',' + detail::format_double(e.cumulative_energy) + '\n';
  }
  return out;
}

}  // namespace evdemand
