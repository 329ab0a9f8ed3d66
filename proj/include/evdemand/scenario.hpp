#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/random.hpp"

namespace evdemand {

/// Triangular speed dip centred on a 15-minute bin. At the centre the speed is
/// free_speed * factor, recovering linearly to free speed `half_width` bins away.
struct CongestionPeak {
  int center_bin = 32;
  int half_width = 6;
  double factor = 0.5;
};

struct ScenarioParams {
  int rows = 20;  // nodes per column
  int cols = 20;  // nodes per row
  double link_length = 1600.0;  // m
  double free_speed = 16.0;     // m/s
  double arterial_speed = 25.0; // m/s, used on every `arterial_every`-th row and column
  int arterial_every = 5;       // 0 disables arterials
  std::int64_t n_persons = 10000;
  int min_legs = 2;
  int max_legs = 3;
  std::vector<CongestionPeak> peaks{{32, 6, 0.45}, {70, 8, 0.5}};  // 08:00 and 17:30
  double congested_share = 0.6;  // share of links that see the peaks
  double origin_lon = -121.95;
  double origin_lat = 37.30;
  std::uint64_t seed = 42;

  void validate() const {
    if (rows < 1 || cols < 1) throw Error("scenario: grid dimensions must be >= 1");
    if (rows * cols < 2) throw Error("scenario: grid needs at least 2 nodes");
    if (!(link_length > 0.0)) throw Error("scenario: link_length must be positive");
    if (!(free_speed > 0.0) || !(arterial_speed > 0.0)) throw Error("scenario: speeds must be positive");
    if (arterial_every < 0) throw Error("scenario: arterial_every must be >= 0");
    if (n_persons < 1) throw Error("scenario: n_persons must be >= 1");
    if (min_legs < 1 || max_legs < min_legs) throw Error("scenario: legs per person range invalid");
    if (!(congested_share >= 0.0 && congested_share <= 1.0)) throw Error("scenario: congested_share must be in [0, 1]");
    for (const auto& p : peaks) {
      if (!(p.factor > 0.0 && p.factor <= 1.0)) throw Error("scenario: congestion factor must be in (0, 1]");
      if (p.half_width < 1) throw Error("scenario: congestion half_width must be >= 1");
    }
  }
};

struct ScenarioTables {
  std::vector<Node> nodes;
  std::vector<Link> links;
  ProfileMap profiles;
  std::vector<Leg> legs;
  RouteMap routes;
};

namespace scenario_detail {

inline constexpr NodeId kNodeBase = 48500000;
inline constexpr LinkId kLinkBase = 7000000000;

struct Grid {
  int rows, cols;
  int id(int r, int c) const { return r * cols + c; }
};

}  // namespace scenario_detail

/// Deterministic synthetic region: a rectangular grid with bidirectional
/// links, peak-hour speed dips, and persons on home-based tours routed along
/// random shortest-hop paths. Recorded leg durations come from stepping the
/// speed profiles with the entry-bin rule, rounded to centiseconds.
inline ScenarioTables generate_scenario(const ScenarioParams& p) {
  using namespace scenario_detail;
  p.validate();
  std::mt19937_64 rng(detail::splitmix64(p.seed));
  const Grid g{p.rows, p.cols};
  ScenarioTables t;

  const double dlat = p.link_length / 111320.0;
  const double dlon = dlat / std::cos(p.origin_lat * std::numbers::pi / 180.0);
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c)
      t.nodes.push_back({kNodeBase + g.id(r, c), p.origin_lon + c * dlon, p.origin_lat + r * dlat, 10.0 + (r + c) % 7});

  // link lookup by (from, to) grid index
  std::vector<std::array<int, 4>> out_link(static_cast<std::size_t>(p.rows * p.cols), {-1, -1, -1, -1});
  auto is_arterial = [&](int r1, int c1, int r2, int c2) {
    if (p.arterial_every <= 0) return false;
    return (r1 == r2 && r1 % p.arterial_every == 0) || (c1 == c2 && c1 % p.arterial_every == 0);
  };
  const int dr[4] = {0, 0, 1, -1};
  const int dc[4] = {1, -1, 0, 0};
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.cols; ++c) {
      for (int d = 0; d < 4; ++d) {
        int r2 = r + dr[d], c2 = c + dc[d];
        if (r2 < 0 || r2 >= p.rows || c2 < 0 || c2 >= p.cols) continue;
        const bool art = is_arterial(r, c, r2, c2);
        out_link[g.id(r, c)][d] = static_cast<int>(t.links.size());
        t.links.push_back({kLinkBase + static_cast<LinkId>(t.links.size()), kNodeBase + g.id(r, c),
                           kNodeBase + g.id(r2, c2), art ? p.arterial_speed : p.free_speed, p.link_length,
                           art ? 2000.0 : 1000.0});
      }
    }
  }

  for (const auto& l : t.links) {
    SpeedProfile sp;
    sp.link_id = l.id;
    sp.speeds.fill(l.free_speed);
    if (detail::uniform01(rng) < p.congested_share) {
      for (const auto& pk : p.peaks) {
        for (int off = -pk.half_width + 1; off < pk.half_width; ++off) {
          int b = ((pk.center_bin + off) % units::kBinsPerDay + units::kBinsPerDay) % units::kBinsPerDay;
          double w = 1.0 - static_cast<double>(std::abs(off)) / pk.half_width;
          double factor = 1.0 - (1.0 - pk.factor) * w;
          // three decimals, like the exported Mobiliti profiles
          double v = std::round(l.free_speed * factor * 1000.0) / 1000.0;
          sp.speeds[b] = std::min(sp.speeds[b], v);
        }
      }
    }
    t.profiles.emplace(l.id, sp);
  }

  auto random_node = [&] { return static_cast<int>(detail::bounded(rng, static_cast<std::uint64_t>(p.rows * p.cols))); };
  auto route_between = [&](int from, int to) {
    std::vector<LinkId> route;
    int r = from / p.cols, c = from % p.cols;
    const int tr = to / p.cols, tc = to % p.cols;
    while (r != tr || c != tc) {
      const int need_c = std::abs(tc - c), need_r = std::abs(tr - r);
      bool move_col = need_r == 0 || (need_c > 0 && detail::bounded(rng, static_cast<std::uint64_t>(need_c + need_r)) <
                                                        static_cast<std::uint64_t>(need_c));
      int d = move_col ? (tc > c ? 0 : 1) : (tr > r ? 2 : 3);
      route.push_back(t.links[out_link[g.id(r, c)][d]].id);
      r += dr[d];
      c += dc[d];
    }
    return route;
  };
  // centiseconds, entry-bin stepping with the default 0.1 m/s floor
  auto travel_cs = [&](const std::vector<LinkId>& route, std::int64_t start_cs) {
    double clock = static_cast<double>(start_cs) / 100.0;
    for (LinkId id : route) {
      const auto& l = t.links[static_cast<std::size_t>(id - kLinkBase)];
      const auto& sp = t.profiles.at(id).speeds;
      int bin = static_cast<int>(static_cast<long long>(std::floor(clock / units::kSecondsPerBin)) % units::kBinsPerDay);
      clock += l.length / std::max(sp[bin], 0.1);
    }
    return std::max<std::int64_t>(1, std::llround(clock * 100.0) - start_cs);
  };

  constexpr std::int64_t kDayEndCs = 23 * 360000 + 59 * 6000;
  LegId next_leg = 0;
  for (PersonId person = 0; person < p.n_persons; ++person) {
    const int n_legs = p.min_legs + static_cast<int>(detail::bounded(rng, static_cast<std::uint64_t>(p.max_legs - p.min_legs + 1)));
    const int home = random_node();
    std::vector<int> stops{home};
    for (int k = 0; k < n_legs; ++k) {
      const bool last = k == n_legs - 1 && n_legs > 1;
      int next = last ? home : random_node();
      // the stop before the return leg must differ from home too
      const bool before_last = k == n_legs - 2;
      while (next == stops.back() || (before_last && next == home)) next = random_node();
      stops.push_back(next);
    }
    std::vector<std::vector<LinkId>> routes;
    for (int k = 0; k < n_legs; ++k) routes.push_back(route_between(stops[k], stops[k + 1]));

    // Retry with tighter schedules until the day fits before midnight.
    std::int64_t first_cs = (5 * 3600 + static_cast<std::int64_t>(detail::bounded(rng, 4 * 3600))) * 100;
    std::int64_t max_dwell_cs = 150 * 60 * 100;
    std::vector<std::int64_t> dwell;
    for (int k = 0; k < n_legs; ++k)
      dwell.push_back(10 * 60 * 100 + static_cast<std::int64_t>(detail::bounded(rng, static_cast<std::uint64_t>(max_dwell_cs))));
    std::vector<Leg> legs;
    for (int attempt = 0;; ++attempt) {
      legs.clear();
      std::int64_t clock = first_cs;
      for (int k = 0; k < n_legs; ++k) {
        if (k) clock += dwell[k];
        const auto dur = travel_cs(routes[k], clock);
        Leg leg;
        leg.person = person;
        leg.orig = kNodeBase + stops[k];
        leg.dest = kNodeBase + stops[k + 1];
        leg.start_time = static_cast<double>(clock) / 100.0;
        leg.end_time = static_cast<double>(clock + dur) / 100.0;
        leg.duration = static_cast<double>(dur) / 100.0;
        legs.push_back(leg);
        clock += dur;
      }
      if (clock <= kDayEndCs) break;
      if (attempt > 40) throw Error("scenario: itinerary does not fit in one day; shorten legs or the grid");
      first_cs = std::max<std::int64_t>(0, first_cs / 2);
      for (auto& d : dwell) d /= 2;
    }
    for (int k = 0; k < n_legs; ++k) {
      legs[k].id = next_leg++;
      t.routes.emplace(legs[k].id, std::move(routes[k]));
      t.legs.push_back(legs[k]);
    }
  }
  return t;
}

/// Directed links whose both endpoints lie in the central block covering
/// `share` of each grid dimension; a stand-in community area.
inline std::vector<LinkId> central_links(const ScenarioTables& t, const ScenarioParams& p, double share = 0.2) {
  using namespace scenario_detail;
  auto inside = [&](NodeId id) {
    const auto idx = id - kNodeBase;
    const double r = static_cast<double>(idx / p.cols), c = static_cast<double>(idx % p.cols);
    const double r0 = (p.rows - 1) * (0.5 - share / 2), r1 = (p.rows - 1) * (0.5 + share / 2);
    const double c0 = (p.cols - 1) * (0.5 - share / 2), c1 = (p.cols - 1) * (0.5 + share / 2);
    return r >= r0 && r <= r1 && c >= c0 && c <= c1;
  };
  std::vector<LinkId> ids;
  for (const auto& l : t.links)
    if (inside(l.node_in) && inside(l.node_out)) ids.push_back(l.id);
  return ids;
}

inline void write_scenario(const ScenarioTables& t, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = TablePaths::in_directory(dir);
  csv::write_file(paths.nodes, write_nodes_csv(t.nodes));
  csv::write_file(paths.links, write_links_csv(t.links));
  csv::write_file(paths.speeds, write_speed_profiles_csv(t.profiles));
  csv::write_file(paths.legs, write_legs_csv(t.legs));
  csv::write_file(paths.routes, write_routes_csv(t.routes));
}

inline NetworkDataset build_dataset(const ScenarioTables& t, BuildOptions opts = {}) {
  return build_dataset(t.nodes, t.links, t.profiles, t.legs, t.routes, opts);
}

}  // namespace evdemand
