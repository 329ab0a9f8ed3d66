#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdemand/core.hpp"
#include "evdemand/csv.hpp"

namespace evdemand {

enum class CurveKind { energy, fuel };
enum class SpeedUnit { mph, mps };
enum class RateUnit { wh_per_mile, wh_per_meter, liters_per_100km, liters_per_meter };

/// Knots in user units, before conversion.
struct CurveConfig {
  CurveKind kind = CurveKind::energy;
  SpeedUnit speed_unit = SpeedUnit::mph;
  RateUnit rate_unit = RateUnit::wh_per_mile;
  std::vector<std::pair<double, double>> knots;  // (speed, rate)
};

inline double to_mps(double speed, SpeedUnit u) { return u == SpeedUnit::mph ? speed * units::kMpsPerMph : speed; }

inline double to_per_meter(double rate, RateUnit u) {
  switch (u) {
    case RateUnit::wh_per_mile: return rate / units::kMetersPerMile;
    case RateUnit::liters_per_100km: return rate / units::kMetersPer100Km;
    case RateUnit::wh_per_meter:
    case RateUnit::liters_per_meter: return rate;
  }
  return rate;
}

inline bool unit_matches_kind(RateUnit u, CurveKind k) {
  bool energy_unit = u == RateUnit::wh_per_mile || u == RateUnit::wh_per_meter;
  return energy_unit == (k == CurveKind::energy);
}

/// Shape-preserving piecewise cubic Hermite interpolant of consumption rate
/// (Wh/m or L/m) over speed (m/s). Slopes follow Fritsch-Carlson/Butland
/// limiting so each segment is monotone between its two knots. Evaluation
/// clamps outside the knot range.
class RateCurve {
 public:
  RateCurve(CurveKind kind, std::vector<double> speeds, std::vector<double> rates)
      : kind_(kind), speeds_(std::move(speeds)), rates_(std::move(rates)) {
    if (speeds_.size() != rates_.size()) throw Error("curve: speed/rate count mismatch");
    if (speeds_.size() < 2) throw Error("curve: at least 2 knots required");
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
      if (!std::isfinite(speeds_[i]) || speeds_[i] < 0.0)
        throw Error("curve: knot " + std::to_string(i) + " has invalid speed");
      if (!(rates_[i] > 0.0) || !std::isfinite(rates_[i]))
        throw Error("curve: knot " + std::to_string(i) + " has non-positive rate");
      if (i > 0 && !(speeds_[i] > speeds_[i - 1]))
        throw Error("curve: knot speeds must be strictly increasing (knot " + std::to_string(i) + ")");
    }
    slopes_ = pchip_slopes(speeds_, rates_);
  }

  CurveKind kind() const { return kind_; }
  std::span<const double> knot_speeds() const { return speeds_; }
  std::span<const double> knot_rates() const { return rates_; }
  std::span<const double> slopes() const { return slopes_; }
  std::size_t size() const { return speeds_.size(); }

  /// Rate per meter at `speed` (m/s).
  double eval(double speed) const {
    if (!(speed >= 0.0)) throw Error("curve: negative speed " + detail::format_double(speed));
    if (speed <= speeds_.front()) return rates_.front();
    if (speed >= speeds_.back()) return rates_.back();
    auto k = static_cast<std::size_t>(std::upper_bound(speeds_.begin(), speeds_.end(), speed) - speeds_.begin()) - 1;
    const double h = speeds_[k + 1] - speeds_[k];
    const double t = (speed - speeds_[k]) / h;
    const double y0 = rates_[k], y1 = rates_[k + 1];
    const double t2 = t * t, t3 = t2 * t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h11 = t3 - t2;
    double y = y0 + (y1 - y0) * h01 + h * (slopes_[k] * h10 + slopes_[k + 1] * h11);
    // The interpolant is monotone on the segment; this only absorbs roundoff.
    return std::clamp(y, std::min(y0, y1), std::max(y0, y1));
  }

  /// Same curve with every rate multiplied by `factor`.
  RateCurve scaled(double factor) const {
    auto r = rates_;
    for (auto& v : r) v *= factor;
    return RateCurve(kind_, speeds_, std::move(r));
  }

 private:
  static std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), d(n - 1), m(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x[k + 1] - x[k];
      d[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
      m[0] = m[1] = d[0];
      return m;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] == 0.0 || d[k] == 0.0 || (d[k - 1] > 0.0) != (d[k] > 0.0)) {
        m[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if ((s > 0.0) != (d0 > 0.0) || d0 == 0.0) return 0.0;
      if ((d0 > 0.0) != (d1 > 0.0) && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return s;
    };
    m[0] = end_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    return m;
  }

  CurveKind kind_;
  std::vector<double> speeds_;
  std::vector<double> rates_;
  std::vector<double> slopes_;
};

inline RateCurve build_curve(const CurveConfig& cfg) {
  if (cfg.knots.size() < 2) throw Error("curve: at least 2 knots required");
  if (!unit_matches_kind(cfg.rate_unit, cfg.kind)) throw Error("curve: rate_unit does not match kind");
  std::vector<double> v, r;
  for (const auto& [speed, rate] : cfg.knots) {
    v.push_back(to_mps(speed, cfg.speed_unit));
    r.push_back(to_per_meter(rate, cfg.rate_unit));
  }
  return RateCurve(cfg.kind, std::move(v), std::move(r));
}

inline CurveConfig parse_curve_config(const nlohmann::json& j) {
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(key)) throw Error(std::string("curve file: missing field '") + key + "'");
    return j.at(key);
  };
  auto str = [&](const char* key) {
    const auto& v = require(key);
    if (!v.is_string()) throw Error(std::string("curve file: field '") + key + "' must be a string");
    return v.get<std::string>();
  };
  CurveConfig cfg;
  auto kind = str("kind");
  if (kind == "energy") cfg.kind = CurveKind::energy;
  else if (kind == "fuel") cfg.kind = CurveKind::fuel;
  else throw Error("curve file: field 'kind' has unknown value '" + kind + "'");

  auto su = str("speed_unit");
  if (su == "mph") cfg.speed_unit = SpeedUnit::mph;
  else if (su == "m/s") cfg.speed_unit = SpeedUnit::mps;
  else throw Error("curve file: field 'speed_unit' has unknown unit '" + su + "'");

  auto ru = str("rate_unit");
  if (ru == "wh_per_mile") cfg.rate_unit = RateUnit::wh_per_mile;
  else if (ru == "wh_per_meter") cfg.rate_unit = RateUnit::wh_per_meter;
  else if (ru == "liters_per_100km") cfg.rate_unit = RateUnit::liters_per_100km;
  else if (ru == "liters_per_meter") cfg.rate_unit = RateUnit::liters_per_meter;
  else throw Error("curve file: field 'rate_unit' has unknown unit '" + ru + "'");
  if (!unit_matches_kind(cfg.rate_unit, cfg.kind))
    throw Error("curve file: field 'rate_unit' '" + ru + "' does not match kind '" + kind + "'");

  const auto& knots = require("knots");
  if (!knots.is_array()) throw Error("curve file: field 'knots' must be an array");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& k = knots[i];
    if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
      throw Error("curve file: field 'knots[" + std::to_string(i) + "]' must be [speed, rate]");
    cfg.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
  }
  if (cfg.knots.size() < 2) throw Error("curve file: field 'knots' needs at least 2 entries");
  for (std::size_t i = 1; i < cfg.knots.size(); ++i)
    if (!(cfg.knots[i].first > cfg.knots[i - 1].first))
      throw Error("curve file: field 'knots[" + std::to_string(i) + "]' speed not strictly increasing");
  return cfg;
}

inline RateCurve curve_from_json(const nlohmann::json& j) { return build_curve(parse_curve_config(j)); }

inline RateCurve curve_from_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid JSON: " + e.what());
  }
  try {
    return curve_from_json(j);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace evdemand
