#pragma once

#include <string>
#include <vector>

#include "evdemand/evdemand.hpp"

namespace fixtures {

using namespace evdemand;

inline SpeedProfile flat_profile(LinkId id, double speed) {
  SpeedProfile p;
  p.link_id = id;
  p.speeds.fill(speed);
  return p;
}

/// Straight chain of nodes 1..n+1 along a parallel, links 101..100+n.
struct Chain {
  std::vector<Node> nodes;
  std::vector<Link> links;
  ProfileMap profiles;
  std::vector<Leg> legs;
  RouteMap routes;

  static Chain make(const std::vector<double>& lengths, double free_speed = 10.0) {
    Chain c;
    for (std::size_t i = 0; i <= lengths.size(); ++i)
      c.nodes.push_back({static_cast<NodeId>(i + 1), -122.0 + 0.01 * static_cast<double>(i), 37.5, 0.0});
    for (std::size_t i = 0; i < lengths.size(); ++i)
      c.links.push_back({static_cast<LinkId>(101 + i), static_cast<NodeId>(i + 1), static_cast<NodeId>(i + 2),
                         free_speed, lengths[i], 1000.0});
    return c;
  }

  std::vector<LinkId> all_links() const {
    std::vector<LinkId> ids;
    for (const auto& l : links) ids.push_back(l.id);
    return ids;
  }

  /// Leg over `route` starting at `start` with the given duration.
  void add_leg(LegId id, PersonId person, const std::vector<LinkId>& route, double start, double duration) {
    const auto& first = *std::find_if(links.begin(), links.end(), [&](const Link& l) { return l.id == route.front(); });
    const auto& last = *std::find_if(links.begin(), links.end(), [&](const Link& l) { return l.id == route.back(); });
    legs.push_back({id, person, first.node_in, last.node_out, start, start + duration, duration});
    routes[id] = route;
  }

  NetworkDataset build(BuildOptions opts = {}) const { return build_dataset(nodes, links, profiles, legs, routes, opts); }
};

/// Knots in mph / Wh per mile.
inline RateCurve energy_curve(std::vector<std::pair<double, double>> knots) {
  CurveConfig cfg;
  cfg.kind = CurveKind::energy;
  cfg.speed_unit = SpeedUnit::mph;
  cfg.rate_unit = RateUnit::wh_per_mile;
  cfg.knots = std::move(knots);
  return build_curve(cfg);
}

inline RateCurve constant_energy_curve(double wh_per_mile) {
  return energy_curve({{10.0, wh_per_mile}, {60.0, wh_per_mile}});
}

/// Fuel curve in L/100km.
inline RateCurve fuel_curve(std::vector<std::pair<double, double>> knots) {
  CurveConfig cfg;
  cfg.kind = CurveKind::fuel;
  cfg.speed_unit = SpeedUnit::mph;
  cfg.rate_unit = RateUnit::liters_per_100km;
  cfg.knots = std::move(knots);
  return build_curve(cfg);
}

/// U-shaped placeholder, same knots as config/energy_placeholder.json.
inline RateCurve placeholder_energy() {
  return energy_curve({{5, 400}, {15, 290}, {25, 252}, {35, 240}, {45, 252}, {55, 280}, {65, 320}, {75, 370}, {85, 430}});
}

}  // namespace fixtures
