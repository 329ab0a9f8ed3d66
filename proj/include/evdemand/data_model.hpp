#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"

namespace evdemand {

struct Node {
  NodeId id = 0;
  double lon = 0.0;  // degrees
  double lat = 0.0;  // degrees
  double elev = 0.0; // meters

  bool operator==(const Node&) const = default;
};

struct Link {
  LinkId id = 0;
  NodeId node_in = 0;
  NodeId node_out = 0;
  double free_speed = 0.0;  // m/s
  double length = 0.0;      // m
  double capacity = 0.0;    // veh/h

  bool operator==(const Link&) const = default;
};

/// 96 speeds (m/s), one per 15-minute bin starting at 00:00.
struct SpeedProfile {
  LinkId link_id = 0;
  std::array<double, units::kBinsPerDay> speeds{};

  bool operator==(const SpeedProfile&) const = default;
};

/// Times are seconds since midnight.
struct Leg {
  LegId id = 0;
  PersonId person = 0;
  NodeId orig = 0;
  NodeId dest = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  double duration = 0.0;

  bool operator==(const Leg&) const = default;
};

using ProfileMap = std::map<LinkId, SpeedProfile>;
using RouteMap = std::map<LegId, std::vector<LinkId>>;

inline constexpr double kDurationTolerance = 0.02;

// ---------------------------------------------------------------------------
// Time helpers

/// Parses "HH:MM:SS.ss" into seconds.
inline std::optional<double> parse_clock(std::string_view s) {
  s = detail::trim(s);
  auto parts = csv::split(s, ':');
  if (parts.size() != 3) return std::nullopt;
  std::int64_t h = 0, m = 0;
  double sec = 0.0;
  if (!detail::parse_number(parts[0], h) || !detail::parse_number(parts[1], m) ||
      !detail::parse_number(parts[2], sec))
    return std::nullopt;
  if (h < 0 || m < 0 || m >= 60 || sec < 0.0 || sec >= 60.0) return std::nullopt;
  return static_cast<double>(h * 3600 + m * 60) + sec;
}

/// Formats seconds as "HH:MM:SS.ss", rounded to the nearest centisecond.
inline std::string format_clock(double seconds) {
  auto cs = static_cast<std::int64_t>(std::llround(seconds * 100.0));
  if (cs < 0) throw Error("negative time " + detail::format_double(seconds));
  const auto h = cs / 360000;
  const auto m = (cs / 6000) % 60;
  const auto s = (cs / 100) % 60;
  const auto frac = cs % 100;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld.%02lld", static_cast<long long>(h),
                static_cast<long long>(m), static_cast<long long>(s), static_cast<long long>(frac));
  return buf;
}

// ---------------------------------------------------------------------------
// Parsing

inline std::vector<Node> parse_nodes(std::string_view text) {
  constexpr std::string_view table = "nodes";
  std::vector<Node> nodes;
  std::unordered_set<NodeId> seen;
  for (const auto& row : csv::data_rows(text)) {
    auto f = csv::split(row.text);
    if (f.size() != 4) csv::fail(table, row.index, "expected 4 columns, got " + std::to_string(f.size()));
    Node n;
    n.id = csv::field<std::int64_t>(table, row, f[0], "node_id");
    n.lon = csv::field<double>(table, row, f[1], "lon");
    n.lat = csv::field<double>(table, row, f[2], "lat");
    n.elev = csv::field<double>(table, row, f[3], "elev");
    if (!(n.lon >= -180.0 && n.lon <= 180.0)) csv::fail(table, row.index, "lon out of range");
    if (!(n.lat >= -90.0 && n.lat <= 90.0)) csv::fail(table, row.index, "lat out of range");
    if (!seen.insert(n.id).second)
      csv::fail(table, row.index, "duplicate node_id " + std::to_string(n.id));
    nodes.push_back(n);
  }
  return nodes;
}

inline std::vector<Link> parse_links(std::string_view text) {
  constexpr std::string_view table = "links";
  std::vector<Link> links;
  std::unordered_set<LinkId> seen;
  for (const auto& row : csv::data_rows(text)) {
    auto f = csv::split(row.text);
    if (f.size() != 6) csv::fail(table, row.index, "expected 6 columns, got " + std::to_string(f.size()));
    Link l;
    l.id = csv::field<std::int64_t>(table, row, f[0], "link_id");
    l.node_in = csv::field<std::int64_t>(table, row, f[1], "node_id_in");
    l.node_out = csv::field<std::int64_t>(table, row, f[2], "node_id_out");
    l.free_speed = csv::field<double>(table, row, f[3], "free_speed");
    l.length = csv::field<double>(table, row, f[4], "length");
    l.capacity = csv::field<double>(table, row, f[5], "capacity");
    if (!(l.free_speed > 0.0) || !std::isfinite(l.free_speed))
      csv::fail(table, row.index, "free_speed must be positive");
    if (!(l.length > 0.0) || !std::isfinite(l.length)) csv::fail(table, row.index, "length must be positive");
    if (!seen.insert(l.id).second)
      csv::fail(table, row.index, "duplicate link_id " + std::to_string(l.id));
    links.push_back(l);
  }
  return links;
}

inline ProfileMap parse_speed_profiles(std::string_view text) {
  constexpr std::string_view table = "speeds";
  ProfileMap profiles;
  for (const auto& row : csv::data_rows(text)) {
    auto f = csv::split(row.text);
    if (f.size() != 1 + units::kBinsPerDay)
      csv::fail(table, row.index, "expected 97 columns, got " + std::to_string(f.size()));
    SpeedProfile p;
    p.link_id = csv::field<std::int64_t>(table, row, f[0], "link_id");
    for (int b = 0; b < units::kBinsPerDay; ++b) {
      double v = csv::field<double>(table, row, f[1 + b], "speed");
      if (!(v >= 0.0) || !std::isfinite(v)) csv::fail(table, row.index, "negative speed in bin " + std::to_string(b));
      p.speeds[b] = v;
    }
    if (!profiles.emplace(p.link_id, p).second)
      csv::fail(table, row.index, "duplicate link_id " + std::to_string(p.link_id));
  }
  return profiles;
}

inline std::vector<Leg> parse_legs(std::string_view text) {
  constexpr std::string_view table = "legs";
  std::vector<Leg> legs;
  std::unordered_set<LegId> seen;
  for (const auto& row : csv::data_rows(text)) {
    auto f = csv::split(row.text);
    if (f.size() != 7) csv::fail(table, row.index, "expected 7 columns, got " + std::to_string(f.size()));
    Leg leg;
    leg.id = csv::field<std::int64_t>(table, row, f[0], "leg_id");
    leg.person = csv::field<std::int64_t>(table, row, f[1], "person_id");
    leg.orig = csv::field<std::int64_t>(table, row, f[2], "orig_node");
    leg.dest = csv::field<std::int64_t>(table, row, f[3], "dest_node");
    auto clock = [&](std::string_view s, std::string_view name) {
      auto t = parse_clock(s);
      if (!t) csv::fail(table, row.index, "unparseable " + std::string(name) + " '" + std::string(detail::trim(s)) + "'");
      return *t;
    };
    leg.start_time = clock(f[4], "start_time");
    leg.end_time = clock(f[5], "end_time");
    leg.duration = clock(f[6], "duration");
    if (leg.end_time < leg.start_time) csv::fail(table, row.index, "end_time before start_time");
    if (std::abs(leg.duration - (leg.end_time - leg.start_time)) > kDurationTolerance + 1e-9)
      csv::fail(table, row.index, "duration inconsistent with end_time - start_time");
    if (!seen.insert(leg.id).second) csv::fail(table, row.index, "duplicate leg_id " + std::to_string(leg.id));
    legs.push_back(leg);
  }
  return legs;
}

inline RouteMap parse_routes(std::string_view text) {
  constexpr std::string_view table = "routes";
  RouteMap routes;
  for (const auto& row : csv::data_rows(text)) {
    auto comma = row.text.find(',');
    if (comma == std::string_view::npos) csv::fail(table, row.index, "expected leg_id,route");
    auto leg_id = csv::field<std::int64_t>(table, row, row.text.substr(0, comma), "leg_id");
    auto list = detail::trim(row.text.substr(comma + 1));
    if (list.size() < 2 || list.front() != '[' || list.back() != ']')
      csv::fail(table, row.index, "route must be a bracketed list");
    list = detail::trim(list.substr(1, list.size() - 2));
    if (list.find_first_of("[]") != std::string_view::npos) csv::fail(table, row.index, "unmatched bracket");
    if (list.empty()) csv::fail(table, row.index, "empty route");
    std::vector<LinkId> ids;
    for (auto tok : csv::split(list)) ids.push_back(csv::field<std::int64_t>(table, row, tok, "link_id"));
    if (!routes.emplace(leg_id, std::move(ids)).second)
      csv::fail(table, row.index, "duplicate leg_id " + std::to_string(leg_id));
  }
  return routes;
}

// ---------------------------------------------------------------------------
// Serialization, same column order the parsers expect.

inline std::string write_nodes_csv(std::span<const Node> nodes) {
  std::string out = "node_id,lon,lat,elev\n";
  for (const auto& n : nodes) {
    out += std::to_string(n.id) + ',' + detail::format_double(n.lon) + ',' + detail::format_double(n.lat) + ',' +
           detail::format_double(n.elev) + '\n';
  }
  return out;
}

inline std::string write_links_csv(std::span<const Link> links) {
  std::string out = "link_id,node_id_in,node_id_out,free_speed,length,capacity\n";
  for (const auto& l : links) {
    out += std::to_string(l.id) + ',' + std::to_string(l.node_in) + ',' + std::to_string(l.node_out) + ',' +
           detail::format_double(l.free_speed) + ',' + detail::format_double(l.length) + ',' +
           detail::format_double(l.capacity) + '\n';
  }
  return out;
}

inline std::string write_speed_profiles_csv(const ProfileMap& profiles) {
  std::string out = "link_id";
  for (int b = 0; b < units::kBinsPerDay; ++b) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",%02d:%02d", b / 4, (b % 4) * 15);
    out += buf;
  }
  out += '\n';
  for (const auto& [id, p] : profiles) {
    out += std::to_string(id);
    for (double v : p.speeds) out += ',' + detail::format_double(v);
    out += '\n';
  }
  return out;
}

/// Times are written at centisecond resolution.
inline std::string write_legs_csv(std::span<const Leg> legs) {
  std::string out = "leg_id,person_id,orig_node,dest_node,start_time,end_time,duration\n";
  for (const auto& l : legs) {
    out += std::to_string(l.id) + ',' + std::to_string(l.person) + ',' + std::to_string(l.orig) + ',' +
           std::to_string(l.dest) + ',' + format_clock(l.start_time) + ',' + format_clock(l.end_time) + ',' +
           format_clock(l.duration) + '\n';
  }
  return out;
}

inline std::string write_routes_csv(const RouteMap& routes) {
  std::string out = "leg_id,route\n";
  for (const auto& [leg, ids] : routes) {
    out += std::to_string(leg) + ",[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(ids[i]);
    }
    out += "]\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

struct BuildOptions {
  bool strict = false;
};

/// Read-only, cross-validated view of the five tables. Routes are stored as
/// link indices so the estimators never hash on the hot path.
class NetworkDataset {
 public:
  using Index = std::uint32_t;

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const Leg> legs() const { return legs_; }
  const std::map<PersonId, std::vector<Index>>& persons() const { return persons_; }

  std::optional<Index> find_node(NodeId id) const { return find(node_index_, id); }
  std::optional<Index> find_link(LinkId id) const { return find(link_index_, id); }
  std::optional<Index> find_leg(LegId id) const { return find(leg_index_, id); }

  const Node& node(NodeId id) const { return nodes_[require(node_index_, id, "node")]; }
  const Link& link(LinkId id) const { return links_[require(link_index_, id, "link")]; }
  const Leg& leg(LegId id) const { return legs_[require(leg_index_, id, "leg")]; }
  Index leg_index(LegId id) const { return require(leg_index_, id, "leg"); }
  Index link_index(LinkId id) const { return require(link_index_, id, "link"); }

  /// Downstream node of a link, by link index.
  const Node& node_out(Index link) const { return nodes_[link_node_out_[link]]; }

  bool has_profile(Index link) const { return has_profile_[link]; }
  const std::array<double, units::kBinsPerDay>& profile(Index link) const { return profiles_[link]; }

  bool has_route(Index leg) const { return !routes_[leg].empty(); }
  std::span<const Index> route(Index leg) const { return routes_[leg]; }
  std::vector<LinkId> route_link_ids(LegId id) const {
    std::vector<LinkId> ids;
    for (auto i : routes_[leg_index(id)]) ids.push_back(links_[i].id);
    return ids;
  }

  /// Legs of a person in chronological order (ties by leg_id).
  std::vector<Index> person_legs(PersonId id) const {
    auto it = persons_.find(id);
    if (it == persons_.end()) throw Error("unknown person " + std::to_string(id));
    return it->second;
  }

  std::size_t route_count() const { return n_routes_; }

  friend NetworkDataset build_dataset(std::vector<Node>, std::vector<Link>, const ProfileMap&, std::vector<Leg>,
                                      const RouteMap&, BuildOptions, Diagnostics&);

 private:
  using IdMap = std::unordered_map<std::int64_t, Index>;

  static std::optional<Index> find(const IdMap& m, std::int64_t id) {
    auto it = m.find(id);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }
  static Index require(const IdMap& m, std::int64_t id, const char* what) {
    auto it = m.find(id);
    if (it == m.end()) throw Error(std::string("unknown ") + what + " " + std::to_string(id));
    return it->second;
  }

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Leg> legs_;
  IdMap node_index_, link_index_, leg_index_;
  std::vector<Index> link_node_out_;
  std::vector<std::array<double, units::kBinsPerDay>> profiles_;
  std::vector<bool> has_profile_;
  std::vector<std::vector<Index>> routes_;
  std::size_t n_routes_ = 0;
  std::map<PersonId, std::vector<Index>> persons_;
};

/// Validates all cross references. Dangling references throw; topology defects
/// (route breaks, origin mismatch) are warnings unless `opts.strict`.
inline NetworkDataset build_dataset(std::vector<Node> nodes, std::vector<Link> links, const ProfileMap& profiles,
                                    std::vector<Leg> legs, const RouteMap& routes, BuildOptions opts,
                                    Diagnostics& diag) {
  NetworkDataset ds;
  auto defect = [&](std::string msg) {
    if (opts.strict) throw Error(msg);
    diag.warn(std::move(msg));
  };

  ds.nodes_ = std::move(nodes);
  for (NetworkDataset::Index i = 0; i < ds.nodes_.size(); ++i)
    if (!ds.node_index_.emplace(ds.nodes_[i].id, i).second)
      throw Error("duplicate node " + std::to_string(ds.nodes_[i].id));

  ds.links_ = std::move(links);
  ds.link_node_out_.reserve(ds.links_.size());
  for (NetworkDataset::Index i = 0; i < ds.links_.size(); ++i) {
    const auto& l = ds.links_[i];
    if (!ds.link_index_.emplace(l.id, i).second) throw Error("duplicate link " + std::to_string(l.id));
    if (!ds.node_index_.contains(l.node_in))
      throw Error("link " + std::to_string(l.id) + ": unknown node " + std::to_string(l.node_in));
    auto out = ds.node_index_.find(l.node_out);
    if (out == ds.node_index_.end())
      throw Error("link " + std::to_string(l.id) + ": unknown node " + std::to_string(l.node_out));
    ds.link_node_out_.push_back(out->second);
  }

  ds.profiles_.assign(ds.links_.size(), {});
  ds.has_profile_.assign(ds.links_.size(), false);
  for (const auto& [id, p] : profiles) {
    auto it = ds.link_index_.find(id);
    if (it == ds.link_index_.end()) throw Error("speed profile: unknown link " + std::to_string(id));
    ds.profiles_[it->second] = p.speeds;
    ds.has_profile_[it->second] = true;
  }

  ds.legs_ = std::move(legs);
  for (NetworkDataset::Index i = 0; i < ds.legs_.size(); ++i) {
    const auto& leg = ds.legs_[i];
    if (leg.end_time < leg.start_time) throw Error("leg " + std::to_string(leg.id) + ": end_time before start_time");
    if (!ds.leg_index_.emplace(leg.id, i).second) throw Error("duplicate leg " + std::to_string(leg.id));
    ds.persons_[leg.person].push_back(i);
  }

  ds.routes_.assign(ds.legs_.size(), {});
  for (const auto& [leg_id, ids] : routes) {
    auto leg_it = ds.leg_index_.find(leg_id);
    if (leg_it == ds.leg_index_.end()) throw Error("route: unknown leg " + std::to_string(leg_id));
    if (ids.empty()) throw Error("route for leg " + std::to_string(leg_id) + " is empty");
    auto& resolved = ds.routes_[leg_it->second];
    resolved.reserve(ids.size());
    for (LinkId lid : ids) {
      auto it = ds.link_index_.find(lid);
      if (it == ds.link_index_.end()) throw Error("unknown link " + std::to_string(lid));
      resolved.push_back(it->second);
    }
    for (std::size_t k = 0; k + 1 < resolved.size(); ++k) {
      const auto& a = ds.links_[resolved[k]];
      const auto& b = ds.links_[resolved[k + 1]];
      if (a.node_out != b.node_in)
        defect("leg " + std::to_string(leg_id) + ": route break between link " + std::to_string(a.id) +
               " and link " + std::to_string(b.id));
    }
    const auto& leg = ds.legs_[leg_it->second];
    if (leg.orig != ds.links_[resolved.front()].node_in)
      defect("leg " + std::to_string(leg_id) + ": orig_node " + std::to_string(leg.orig) +
             " differs from first link's node_id_in " + std::to_string(ds.links_[resolved.front()].node_in));
    if (leg.dest != ds.links_[resolved.back()].node_out)
      defect("leg " + std::to_string(leg_id) + ": dest_node " + std::to_string(leg.dest) +
             " differs from last link's node_id_out " + std::to_string(ds.links_[resolved.back()].node_out));
    ++ds.n_routes_;
  }

  for (auto& [person, idx] : ds.persons_) {
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      const auto& la = ds.legs_[a];
      const auto& lb = ds.legs_[b];
      if (la.start_time != lb.start_time) return la.start_time < lb.start_time;
      return la.id < lb.id;
    });
  }
  return ds;
}

inline NetworkDataset build_dataset(std::vector<Node> nodes, std::vector<Link> links, const ProfileMap& profiles,
                                    std::vector<Leg> legs, const RouteMap& routes, BuildOptions opts = {}) {
  Diagnostics diag;
  return build_dataset(std::move(nodes), std::move(links), profiles, std::move(legs), routes, opts, diag);
}

inline double route_length(const NetworkDataset& ds, NetworkDataset::Index leg) {
  double total = 0.0;
  for (auto li : ds.route(leg)) total += ds.links()[li].length;
  return total;
}

/// Total route length of a leg in meters.
inline double leg_route_length(const NetworkDataset& ds, LegId leg_id) {
  auto idx = ds.leg_index(leg_id);
  if (!ds.has_route(idx)) throw Error("leg " + std::to_string(leg_id) + " has no route");
  return route_length(ds, idx);
}

// ---------------------------------------------------------------------------
// File loading

struct TablePaths {
  std::string nodes, links, speeds, legs, routes;

  static TablePaths in_directory(const std::string& dir) {
    return {dir + "/nodes.csv", dir + "/links.csv", dir + "/speeds.csv", dir + "/legs.csv", dir + "/routes.csv"};
  }
};

inline NetworkDataset load_dataset(const TablePaths& paths, BuildOptions opts, Diagnostics& diag) {
  auto with_path = [](const std::string& path, auto&& parse) {
    try {
      return parse(csv::read_file(path));
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  };
  auto nodes = with_path(paths.nodes, [](const std::string& t) { return parse_nodes(t); });
  auto links = with_path(paths.links, [](const std::string& t) { return parse_links(t); });
  auto profiles = with_path(paths.speeds, [](const std::string& t) { return parse_speed_profiles(t); });
  auto legs = with_path(paths.legs, [](const std::string& t) { return parse_legs(t); });
  auto routes = with_path(paths.routes, [](const std::string& t) { return parse_routes(t); });
  return build_dataset(std::move(nodes), std::move(links), profiles, std::move(legs), routes, opts, diag);
}

}  // namespace evdemand
