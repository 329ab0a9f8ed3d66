#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fixtures.hpp"

using namespace evdemand;

namespace {

// 1609.344 Wh per mile is exactly 1 Wh per meter, so link lengths read as Wh.
RateCurve one_wh_per_meter() { return fixtures::constant_energy_curve(1609.344); }

NetworkDataset three_leg_person() {
  auto c = fixtures::Chain::make({15000.0, 25000.0, 15000.0});
  c.add_leg(1, 7, {101}, 8 * 3600.0, 1500.0);
  c.add_leg(2, 7, {102}, 12 * 3600.0, 2500.0);
  c.add_leg(3, 7, {103}, 17 * 3600.0, 1500.0);
  return c.build();
}

}  // namespace

TEST(TrackPerson, BelowThresholdNoEvent) {
  auto c = fixtures::Chain::make({9999.0});
  c.add_leg(1, 1, {101}, 0.0, 1000.0);
  auto ds = c.build();
  EXPECT_TRUE(track_person(ds, 1, one_wh_per_meter(), {}).empty());
}

TEST(TrackPerson, CrossingOnSecondLegAtDownstreamNode) {
  auto c = fixtures::Chain::make({9900.0, 200.0});
  c.add_leg(1, 1, {101}, 3600.0, 990.0);
  c.add_leg(2, 1, {102}, 7200.0, 20.0);
  auto ds = c.build();
  auto ev = track_person(ds, 1, one_wh_per_meter(), {});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].threshold, 10000.0);
  EXPECT_EQ(ev[0].leg_id, 2);
  EXPECT_EQ(ev[0].link_id, 102);
  EXPECT_EQ(ev[0].lon, ds.nodes()[*ds.find_node(3)].lon);
  EXPECT_EQ(ev[0].lat, ds.nodes()[*ds.find_node(3)].lat);
  EXPECT_DOUBLE_EQ(ev[0].cumulative_before, 9900.0);
  EXPECT_DOUBLE_EQ(ev[0].cumulative_energy, 10100.0);
  EXPECT_DOUBLE_EQ(ev[0].clock, 7200.0);
}

TEST(TrackPerson, ExactlyAtThresholdCounts) {
  auto c = fixtures::Chain::make({10000.0});
  c.add_leg(1, 1, {101}, 0.0, 1000.0);
  auto ds = c.build();
  EXPECT_EQ(track_person(ds, 1, one_wh_per_meter(), {}).size(), 1u);
}

TEST(TrackPerson, CumulativeAcrossLegsOncePerThreshold) {
  auto ds = three_leg_person();
  auto ev = track_person(ds, 7, one_wh_per_meter(), {});
  ASSERT_EQ(ev.size(), 5u);
  const LegId expected_leg[] = {1, 2, 2, 2, 3};
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(ev[i].threshold, 10000.0 * static_cast<double>(i + 1));
    EXPECT_EQ(ev[i].leg_id, expected_leg[i]);
  }
  std::set<double> seen;
  for (const auto& e : ev) EXPECT_TRUE(seen.insert(e.threshold).second);
}

TEST(TrackPerson, PerLegResetMode) {
  auto ds = three_leg_person();
  auto ev = track_person(ds, 7, one_wh_per_meter(), {}, {.traversal = {}, .per_leg_reset = true});
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_EQ(ev[0].leg_id, 1);
  EXPECT_EQ(ev[1].leg_id, 2);
  EXPECT_EQ(ev[2].leg_id, 2);
  EXPECT_EQ(ev[2].threshold, 20000.0);
  EXPECT_EQ(ev[3].leg_id, 3);
  EXPECT_EQ(ev[3].threshold, 10000.0);
}

TEST(TrackPerson, SingleLinkCrossingSeveralThresholds) {
  auto c = fixtures::Chain::make({5000.0, 26000.0});
  c.add_leg(1, 1, {101, 102}, 0.0, 3100.0);
  auto ds = c.build();
  auto ev = track_person(ds, 1, one_wh_per_meter(), {});
  ASSERT_EQ(ev.size(), 3u);
  for (const auto& e : ev) EXPECT_EQ(e.link_id, 102);
}

TEST(Projection, Example) {
  auto xy = project_to_local({-122.0, 37.5}, {-122.5, 37.0});
  EXPECT_NEAR(xy.x, 0.5 * std::cos(37.0 * std::numbers::pi / 180.0) * 111320.0, 1e-6);
  EXPECT_NEAR(xy.y, 55660.0, 1e-6);
  auto back = unproject(xy, {-122.5, 37.0});
  EXPECT_NEAR(back.lon, -122.0, 1e-12);
  EXPECT_NEAR(back.lat, 37.5, 1e-12);
}

TEST(HexIndex, OriginAndNeighbourCenters) {
  HexGrid grid{{-122.0, 37.0}, 1000.0};
  EXPECT_EQ(hex_index({0.0, 0.0}, grid), (HexCoord{0, 0}));
  for (auto n : kHexNeighbors) {
    auto c = hex_center(n, grid);
    EXPECT_NEAR(std::hypot(c.x, c.y), 1000.0, 1e-9);  // neighbour centers are one width apart
    EXPECT_EQ(hex_index(c, grid), n);
  }
}

TEST(HexIndex, MatchesBruteForceNearestCenter) {
  HexGrid grid{{0.0, 0.0}, 750.0};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coord(-20000.0, 20000.0);
  for (int i = 0; i < 10000; ++i) {
    XY p{coord(rng), coord(rng)};
    // brute force over a window wide enough to contain the answer
    const auto r0 = static_cast<std::int64_t>(std::floor(p.y / (grid.circumradius() * 1.5)));
    const auto q0 = static_cast<std::int64_t>(std::floor(p.x / grid.cell_size - static_cast<double>(r0) / 2.0));
    HexCoord best{};
    double best_d = INFINITY;
    for (auto r = r0 - 3; r <= r0 + 3; ++r)
      for (auto q = q0 - 3; q <= q0 + 3; ++q) {
        auto c = hex_center({q, r}, grid);
        double d = std::hypot(c.x - p.x, c.y - p.y);
        if (d < best_d) {
          best_d = d;
          best = {q, r};
        }
      }
    auto h = hex_index(p, grid);
    auto c = hex_center(h, grid);
    EXPECT_NEAR(std::hypot(c.x - p.x, c.y - p.y), best_d, 1e-9) << p.x << ',' << p.y;
    EXPECT_LE(best_d, grid.circumradius() + 1e-9);
  }
}

TEST(HexIndex, ExactTieGoesToSmallerCoordinate) {
  HexGrid grid{{0.0, 0.0}, 1000.0};
  // midpoint between (0,0) and (1,0)
  EXPECT_EQ(hex_index({500.0, 0.0}, grid), (HexCoord{0, 0}));
  EXPECT_EQ(hex_index({-500.0, 0.0}, grid), (HexCoord{-1, 0}));
}

TEST(AggregateDensity, CountingOracleAndConservation) {
  HexGrid grid{{-121.9, 37.3}, 1000.0};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lon(-122.0, -121.8), lat(37.2, 37.4);
  std::vector<CrossingEvent> events;
  for (int i = 0; i < 3000; ++i) {
    CrossingEvent e;
    e.person = i;
    e.threshold = (i % 3 + 1) * 10000.0;
    e.lon = lon(rng);
    e.lat = lat(rng);
    events.push_back(e);
  }
  auto counts = aggregate_density(events, grid);
  std::map<double, std::map<HexCoord, std::int64_t>> oracle;
  for (const auto& e : events) ++oracle[e.threshold][hex_index(project_to_local({e.lon, e.lat}, grid.origin), grid)];
  EXPECT_EQ(counts.layers, oracle);
  for (double t : {10000.0, 20000.0, 30000.0}) EXPECT_EQ(counts.total(t), 1000);

  auto seeded = aggregate_density(events, grid, ThresholdConfig{});
  EXPECT_EQ(seeded.layers.size(), 5u);
  EXPECT_TRUE(seeded.layers.at(50000.0).empty());
}

TEST(DensityGeojson, SingleCellAndEmpty) {
  HexGrid grid{{-122.0, 37.0}, 1000.0};
  HexBinCounts counts;
  counts.layers[10000.0][{2, -1}] = 4;
  auto gj = density_geojson(counts, grid);
  ASSERT_EQ(gj["features"].size(), 1u);
  const auto& f = gj["features"][0];
  EXPECT_EQ(f["properties"]["count"], 4);
  EXPECT_EQ(f["properties"]["threshold_wh"], 10000.0);
  const auto& ring = f["geometry"]["coordinates"][0];
  ASSERT_EQ(ring.size(), 7u);
  EXPECT_EQ(ring[0], ring[6]);
  std::set<std::pair<double, double>> distinct;
  for (std::size_t i = 0; i < 6; ++i) distinct.insert({ring[i][0].get<double>(), ring[i][1].get<double>()});
  EXPECT_EQ(distinct.size(), 6u);
  // every vertex sits one circumradius from the center
  auto center = hex_center({2, -1}, grid);
  for (std::size_t i = 0; i < 6; ++i) {
    auto v = project_to_local({ring[i][0].get<double>(), ring[i][1].get<double>()}, grid.origin);
    EXPECT_NEAR(std::hypot(v.x - center.x, v.y - center.y), grid.circumradius(), 1e-6);
  }

  auto empty = density_geojson(HexBinCounts{}, grid);
  EXPECT_EQ(empty["type"], "FeatureCollection");
  EXPECT_TRUE(empty["features"].empty());
}

TEST(ExportDensity, CsvRoundTripAndUnknownFormat) {
  HexGrid grid{{-122.0, 37.0}, 500.0};
  HexBinCounts counts;
  counts.layers[10000.0][{0, 0}] = 3;
  counts.layers[10000.0][{-4, 7}] = 1;
  counts.layers[30000.0][{5, 5}] = 12;
  EXPECT_EQ(parse_density_csv(export_density(counts, grid, "csv")), counts);
  auto gj = nlohmann::json::parse(export_density(counts, grid, "geojson"));
  EXPECT_EQ(gj["features"].size(), 3u);
  EXPECT_THROW(export_density(counts, grid, "shapefile"), Error);
}

TEST(ThresholdConfig, Validation) {
  EXPECT_NO_THROW(ThresholdConfig{}.validate());
  EXPECT_THROW((ThresholdConfig{{20000.0, 10000.0}}.validate()), Error);
  EXPECT_THROW((ThresholdConfig{{}}.validate()), Error);
  EXPECT_THROW((ThresholdConfig{{-5.0}}.validate()), Error);
}

TEST(DensityProperties, MonotoneInThresholdAndWorkerIndependent) {
  auto t = generate_scenario({.rows = 10, .cols = 10, .link_length = 2500.0, .n_persons = 500, .seed = 17});
  auto ds = build_dataset(t);
  auto curve = fixtures::placeholder_energy();
  ThresholdConfig cfg{{2000.0, 5000.0, 10000.0, 20000.0}};
  auto ev1 = track_all(ds, curve, cfg, {}, 1);
  auto ev3 = track_all(ds, curve, cfg, {}, 3);
  ASSERT_EQ(ev1.size(), ev3.size());
  for (std::size_t i = 0; i < ev1.size(); ++i) {
    EXPECT_EQ(ev1[i].person, ev3[i].person);
    EXPECT_EQ(ev1[i].threshold, ev3[i].threshold);
    EXPECT_EQ(ev1[i].cumulative_energy, ev3[i].cumulative_energy);
  }
  HexGrid grid{node_centroid(ds), 1000.0};
  auto counts = aggregate_density(ev1, grid, cfg);
  std::int64_t prev = std::numeric_limits<std::int64_t>::max();
  for (double th : cfg.thresholds) {
    EXPECT_LE(counts.total(th), prev);
    prev = counts.total(th);
    std::int64_t n = 0;
    for (const auto& e : ev1) n += e.threshold == th;
    EXPECT_EQ(counts.total(th), n);
  }
  EXPECT_GT(counts.total(2000.0), 0);
  // each person appears at most once per threshold
  std::set<std::pair<PersonId, double>> seen;
  for (const auto& e : ev1) EXPECT_TRUE(seen.insert({e.person, e.threshold}).second);

  auto reset = track_all(ds, curve, cfg, {.traversal = {}, .per_leg_reset = true}, 1);
  EXPECT_LE(aggregate_density(reset, grid).total(2000.0), counts.total(2000.0) * 3);
}
