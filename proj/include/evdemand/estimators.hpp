#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evdemand/core.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/parallel.hpp"
#include "evdemand/rate_curve.hpp"

namespace evdemand {

struct TraversalOptions {
  /// Profile speeds below this (m/s) are raised to it before computing
  /// traversal time, so stalled links stay finite.
  double min_speed = 0.1;
};

struct LinkTraversal {
  LinkId link_id = 0;
  double entry_time = 0.0;      // s since midnight, unwrapped
  double speed_used = 0.0;      // m/s
  double traversal_time = 0.0;  // s
  double energy = 0.0;          // Wh, or L for fuel curves
  bool free_speed_fallback = false;
};

enum class Method { rom, granular };

struct LegEstimate {
  LegId leg_id = 0;
  Method method = Method::rom;
  double energy = 0.0;
  std::vector<LinkTraversal> traversals;  // granular only
  double simulated_duration = 0.0;        // granular only
  std::size_t missing_profiles = 0;       // granular only
};

/// Bin of the 15-minute profile containing `clock`; wraps past midnight.
inline int profile_bin(double clock) {
  auto bin = static_cast<long long>(std::floor(clock / units::kSecondsPerBin)) % units::kBinsPerDay;
  if (bin < 0) bin += units::kBinsPerDay;
  return static_cast<int>(bin);
}

/// Speed used on a link entered at `clock`: the entry bin governs the whole
/// link. Links without a profile run at free speed.
inline double link_speed(const NetworkDataset& ds, NetworkDataset::Index link, double clock,
                         const TraversalOptions& opts, bool& fallback) {
  fallback = !ds.has_profile(link);
  double v = fallback ? ds.links()[link].free_speed : ds.profile(link)[profile_bin(clock)];
  return std::max(v, opts.min_speed);
}

/// Walks `links` starting at `entry_clock`, calling visit(link_index, LinkTraversal)
/// for each link. Returns the clock after the last link.
template <typename Visit>
double walk_links(const NetworkDataset& ds, std::span<const NetworkDataset::Index> links, double entry_clock,
                  const RateCurve& curve, const TraversalOptions& opts, Visit&& visit) {
  double clock = entry_clock;
  for (auto li : links) {
    const auto& link = ds.links()[li];
    LinkTraversal t;
    t.link_id = link.id;
    t.entry_time = clock;
    t.speed_used = link_speed(ds, li, clock, opts, t.free_speed_fallback);
    t.traversal_time = link.length / t.speed_used;
    t.energy = link.length * curve.eval(t.speed_used);
    visit(li, t);
    clock += t.traversal_time;
  }
  return clock;
}

inline NetworkDataset::Index routed_leg(const NetworkDataset& ds, LegId leg_id) {
  auto idx = ds.leg_index(leg_id);
  if (!ds.has_route(idx)) throw Error("leg " + std::to_string(leg_id) + " has no route");
  return idx;
}

/// Route length over recorded duration (m/s).
inline double leg_average_speed(const NetworkDataset& ds, LegId leg_id) {
  auto idx = routed_leg(ds, leg_id);
  const auto& leg = ds.legs()[idx];
  if (!(leg.duration > 0.0)) throw Error("leg " + std::to_string(leg_id) + " has zero duration");
  return route_length(ds, idx) / leg.duration;
}

inline LegEstimate estimate_rom(const NetworkDataset& ds, LegId leg_id, const RateCurve& curve) {
  const double speed = leg_average_speed(ds, leg_id);
  LegEstimate est;
  est.leg_id = leg_id;
  est.method = Method::rom;
  est.energy = leg_route_length(ds, leg_id) * curve.eval(speed);
  return est;
}

inline std::vector<LinkTraversal> traverse_route(const NetworkDataset& ds, LegId leg_id, const RateCurve& curve,
                                                 const TraversalOptions& opts = {}, Diagnostics* diag = nullptr) {
  auto idx = routed_leg(ds, leg_id);
  std::vector<LinkTraversal> out;
  out.reserve(ds.route(idx).size());
  walk_links(ds, ds.route(idx), ds.legs()[idx].start_time, curve, opts, [&](auto, const LinkTraversal& t) {
    if (t.free_speed_fallback && diag)
      diag->warn("link " + std::to_string(t.link_id) + " has no speed profile; using free speed");
    out.push_back(t);
  });
  return out;
}

inline LegEstimate estimate_granular(const NetworkDataset& ds, LegId leg_id, const RateCurve& curve,
                                     const TraversalOptions& opts = {}, Diagnostics* diag = nullptr) {
  LegEstimate est;
  est.leg_id = leg_id;
  est.method = Method::granular;
  est.traversals = traverse_route(ds, leg_id, curve, opts, diag);
  for (const auto& t : est.traversals) {
    est.energy += t.energy;
    est.simulated_duration += t.traversal_time;
    est.missing_profiles += t.free_speed_fallback ? 1 : 0;
  }
  return est;
}

/// Allocation-free granular totals for a leg index; matches estimate_granular
/// bit for bit.
struct GranularTotals {
  double energy = 0.0;
  double duration = 0.0;
  std::size_t missing_profiles = 0;
};

inline GranularTotals granular_totals(const NetworkDataset& ds, NetworkDataset::Index leg, const RateCurve& curve,
                                      const TraversalOptions& opts = {}) {
  GranularTotals g;
  walk_links(ds, ds.route(leg), ds.legs()[leg].start_time, curve, opts, [&](auto, const LinkTraversal& t) {
    g.energy += t.energy;
    g.duration += t.traversal_time;
    g.missing_profiles += t.free_speed_fallback ? 1 : 0;
  });
  return g;
}

// ---------------------------------------------------------------------------
// ROM vs granular comparison

struct ComparisonRecord {
  LegId leg_id = 0;
  double rom_wh = 0.0;
  double granular_wh = 0.0;
  double ratio = 0.0;  // granular / ROM
  double simulated_duration_s = 0.0;
  double recorded_duration_s = 0.0;
};

struct ComparisonStats {
  std::size_t n_trips = 0;
  std::size_t skipped = 0;
  double mean_ratio = 0.0;
  std::vector<std::pair<double, double>> pairs;  // (rom, granular), ROM > 0 only
  std::vector<double> ratios;

  /// Share of trips with ratio in [1 - band, 1 + band].
  double fraction_within_band(double band) const {
    if (ratios.empty()) return 0.0;
    const double lo = 1.0 - band, hi = 1.0 + band;
    auto n = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r >= lo && r <= hi; });
    return static_cast<double>(n) / static_cast<double>(ratios.size());
  }

  /// Share of trips with ratio <= 1 + band (inside the upper band or below it).
  double fraction_at_or_below(double band) const {
    if (ratios.empty()) return 0.0;
    const double hi = 1.0 + band;
    auto n = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r <= hi; });
    return static_cast<double>(n) / static_cast<double>(ratios.size());
  }
};

inline ComparisonStats compare_estimates(std::span<const std::pair<double, double>> pairs,
                                         Diagnostics* diag = nullptr) {
  if (pairs.empty()) throw Error("compare_estimates: no trips");
  ComparisonStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [rom, gran] = pairs[i];
    if (!(rom > 0.0)) {
      ++s.skipped;
      if (diag) diag->warn("trip " + std::to_string(i) + ": non-positive ROM energy, skipped");
      continue;
    }
    s.pairs.emplace_back(rom, gran);
    s.ratios.push_back(gran / rom);
    sum += gran / rom;
  }
  s.n_trips = s.ratios.size();
  s.mean_ratio = s.n_trips ? sum / static_cast<double>(s.n_trips) : 0.0;
  return s;
}

/// ROM and granular estimates for every routed leg with positive duration,
/// ordered by leg_id.
inline std::vector<ComparisonRecord> estimate_all(const NetworkDataset& ds, const RateCurve& curve,
                                                  const TraversalOptions& opts, std::size_t workers,
                                                  Diagnostics& diag) {
  std::vector<NetworkDataset::Index> legs;
  for (NetworkDataset::Index i = 0; i < ds.legs().size(); ++i) {
    if (!ds.has_route(i)) continue;
    if (!(ds.legs()[i].duration > 0.0)) {
      diag.warn("leg " + std::to_string(ds.legs()[i].id) + ": zero duration, skipped");
      continue;
    }
    legs.push_back(i);
  }
  std::sort(legs.begin(), legs.end(), [&](auto a, auto b) { return ds.legs()[a].id < ds.legs()[b].id; });

  std::vector<ComparisonRecord> out(legs.size());
  std::vector<std::size_t> missing(legs.size(), 0);
  parallel_for(legs.size(), workers, [&](std::size_t k) {
    const auto li = legs[k];
    const auto& leg = ds.legs()[li];
    const double length = route_length(ds, li);
    auto& r = out[k];
    r.leg_id = leg.id;
    r.rom_wh = length * curve.eval(length / leg.duration);
    auto g = granular_totals(ds, li, curve, opts);
    r.granular_wh = g.energy;
    r.ratio = r.rom_wh > 0.0 ? r.granular_wh / r.rom_wh : 0.0;
    r.simulated_duration_s = g.duration;
    r.recorded_duration_s = leg.duration;
    missing[k] = g.missing_profiles;
  });
  std::size_t total_missing = 0;
  for (auto m : missing) total_missing += m;
  if (total_missing)
    diag.warn(std::to_string(total_missing) + " link traversals had no speed profile; free speed used");
  return out;
}

inline std::string write_comparison_csv(std::span<const ComparisonRecord> records) {
  std::string out = "leg_id,rom_wh,granular_wh,ratio,simulated_duration_s,recorded_duration_s\n";
  for (const auto& r : records) {
    out += std::to_string(r.leg_id) + ',' + detail::format_double(r.rom_wh) + ',' +
           detail::format_double(r.granular_wh) + ',' + detail::format_double(r.ratio) + ',' +
           detail::format_double(r.simulated_duration_s) + ',' + detail::format_double(r.recorded_duration_s) + '\n';
  }
  return out;
}

}  // namespace evdemand
