#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"

using namespace evdemand;

namespace {

constexpr double kMile = 1609.344;

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = (std::filesystem::temp_directory_path() / ("evdemand_curve_" + name)).string();
  csv::write_file(path, content);
  return path;
}

/// Random curve with 2..12 knots in m/s and Wh/m.
RateCurve random_curve(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nk(2, 12);
  std::uniform_real_distribution<double> gap(0.2, 8.0), rate(0.05, 0.6);
  const int n = nk(rng);
  std::vector<double> v, r;
  double s = gap(rng);
  for (int i = 0; i < n; ++i) {
    v.push_back(s);
    s += gap(rng);
    // occasional plateaus exercise the zero-slope branch
    r.push_back(i > 0 && rng() % 5 == 0 ? r.back() : rate(rng));
  }
  return RateCurve(CurveKind::energy, v, r);
}

}  // namespace

TEST(BuildCurve, ConstantCurve) {
  auto c = fixtures::constant_energy_curve(250.0);
  for (double v : {0.0, 3.0, 10.0, 20.0, 26.8, 40.0}) EXPECT_DOUBLE_EQ(c.eval(v), 250.0 / kMile);
  EXPECT_NEAR(c.eval(12.0), 0.15534, 5e-6);
}

TEST(BuildCurve, PassesThroughKnots) {
  auto c = fixtures::energy_curve({{10, 300}, {30, 220}, {60, 260}});
  EXPECT_DOUBLE_EQ(c.eval(10 * 0.44704), 300 / kMile);
  EXPECT_DOUBLE_EQ(c.eval(30 * 0.44704), 220 / kMile);
  EXPECT_DOUBLE_EQ(c.eval(60 * 0.44704), 260 / kMile);
}

TEST(BuildCurve, Errors) {
  EXPECT_THROW(fixtures::energy_curve({{10, 300}}), Error);
  EXPECT_THROW(fixtures::energy_curve({{10, 300}, {10, 200}}), Error);
  EXPECT_THROW(fixtures::energy_curve({{20, 300}, {10, 200}}), Error);
  EXPECT_THROW(fixtures::energy_curve({{10, 300}, {20, 0}}), Error);
  EXPECT_THROW(fixtures::energy_curve({{10, -1}, {20, 5}}), Error);
  CurveConfig mismatch;
  mismatch.kind = CurveKind::fuel;
  mismatch.rate_unit = RateUnit::wh_per_mile;
  mismatch.knots = {{1, 1}, {2, 2}};
  EXPECT_THROW(build_curve(mismatch), Error);
}

TEST(BuildCurve, UnitConversions) {
  auto fuel = fixtures::fuel_curve({{10, 8.0}, {60, 8.0}});
  EXPECT_DOUBLE_EQ(fuel.eval(10.0), 8.0 / 100000.0);
  EXPECT_DOUBLE_EQ(fuel.knot_speeds()[1], 60 * 0.44704);
}

// Frozen from scipy.interpolate.PchipInterpolator on the same knots
// (converted to m/s and Wh/m), an independent implementation.
TEST(EvalRate, MatchesReferencePchip) {
  auto c = fixtures::energy_curve({{10, 300}, {30, 220}, {60, 260}});
  const std::pair<double, double> ref[] = {
      {5.0, 0.18191289478790243},     {6.0, 0.17358446481004833},  {10.0, 0.1460261946176981},
      {13.4112, 0.13670166229221348}, {20.0, 0.13964898142573465}, {25.0, 0.15273867939038555},
  };
  for (auto [v, r] : ref) EXPECT_NEAR(c.eval(v), r, 1e-14 * r) << v;

  auto u = fixtures::placeholder_energy();
  EXPECT_NEAR(u.eval(5.0), 0.19940912770221705, 1e-15);
  EXPECT_NEAR(u.eval(25.0), 0.17592400093656851, 1e-15);
  EXPECT_NEAR(u.eval(12.5), 0.15334794581105674, 1e-15);
}

TEST(EvalRate, ClampAndErrors) {
  auto c = fixtures::energy_curve({{10, 300}, {30, 220}, {60, 260}});
  EXPECT_EQ(c.eval(0.0), 300 / kMile);
  EXPECT_EQ(c.eval(1000.0), 260 / kMile);
  EXPECT_THROW(c.eval(-0.1), Error);
}

TEST(CurveFile, ValidAndInvalid) {
  auto ok = temp_file("ok.json", R"({"kind":"energy","speed_unit":"mph","rate_unit":"wh_per_mile",
                                     "knots":[[10,300],[30,220],[60,260]]})");
  auto c = curve_from_file(ok);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.eval(20.0), fixtures::energy_curve({{10, 300}, {30, 220}, {60, 260}}).eval(20.0));

  auto order = temp_file("order.json", R"({"kind":"energy","speed_unit":"mph","rate_unit":"wh_per_mile",
                                           "knots":[[30,300],[10,220]]})");
  EXPECT_THROW(curve_from_file(order), Error);

  auto furlongs = temp_file("furlongs.json", R"({"kind":"energy","speed_unit":"furlongs","rate_unit":"wh_per_mile",
                                                 "knots":[[10,300],[30,220]]})");
  try {
    curve_from_file(furlongs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("speed_unit"), std::string::npos);
  }

  auto missing = temp_file("missing.json", R"({"kind":"fuel","speed_unit":"m/s","knots":[[1,1],[2,2]]})");
  try {
    curve_from_file(missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("rate_unit"), std::string::npos);
  }
  EXPECT_THROW(curve_from_file(temp_file("bad.json", "{not json")), Error);
  EXPECT_THROW(curve_from_file("/nonexistent/curve.json"), Error);
}

TEST(CurveProperties, InterpolationAndClamping) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_curve(rng);
    auto v = c.knot_speeds();
    auto r = c.knot_rates();
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_LE(std::abs(c.eval(v[k]) - r[k]), 1e-12 * r[k]);
    EXPECT_EQ(c.eval(0.0), r.front());
    EXPECT_EQ(c.eval(v.front() * 0.5), r.front());
    EXPECT_EQ(c.eval(v.back() + 1.0), r.back());
    EXPECT_EQ(c.eval(v.back() * 10.0), r.back());
  }
}

TEST(CurveProperties, NoOvershootAndMonotoneSegments) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_curve(rng);
    auto v = c.knot_speeds();
    auto r = c.knot_rates();
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double lo = std::min(r[k], r[k + 1]), hi = std::max(r[k], r[k + 1]);
      for (int i = 0; i < 1000; ++i) {
        double y = c.eval(v[k] + unit(rng) * (v[k + 1] - v[k]));
        ASSERT_GE(y, lo);
        ASSERT_LE(y, hi);
      }
      // ordered sweep: direction of the segment is preserved
      double prev = c.eval(v[k]);
      for (int i = 1; i <= 1000; ++i) {
        double y = c.eval(v[k] + (v[k + 1] - v[k]) * i / 1000.0);
        if (r[k + 1] <= r[k]) ASSERT_LE(y, prev + 1e-15 * prev);
        else ASSERT_GE(y, prev - 1e-15 * prev);
        prev = y;
      }
    }
  }
}

TEST(CurveProperties, ScaledCurveIsLinear) {
  auto c = fixtures::placeholder_energy();
  auto s = c.scaled(2.5);
  for (double v : {0.0, 3.3, 7.7, 15.0, 40.0}) EXPECT_NEAR(s.eval(v), 2.5 * c.eval(v), 1e-15);
}
