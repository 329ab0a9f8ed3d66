#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace evdemand {

using NodeId = std::int64_t;
using LinkId = std::int64_t;
using LegId = std::int64_t;
using PersonId = std::int64_t;

/// Thrown for malformed input, broken invariants and bad configuration.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace units {
inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kMpsPerMph = 0.44704;
inline constexpr double kLitersPerGallon = 3.785411784;
inline constexpr double kMetersPer100Km = 100000.0;
inline constexpr double kSecondsPerBin = 900.0;
inline constexpr int kBinsPerDay = 96;
}  // namespace units

/// Collects non-fatal findings. Only the first `max_kept` messages are stored,
/// but every warning is counted.
struct Diagnostics {
  std::vector<std::string> messages;
  std::size_t count = 0;
  std::size_t max_kept = 100;

  void warn(std::string msg) {
    ++count;
    if (messages.size() < max_kept) messages.push_back(std::move(msg));
  }
  void merge(const Diagnostics& other) {
    count += other.count;
    for (const auto& m : other.messages) {
      if (messages.size() >= max_kept) break;
      messages.push_back(m);
    }
  }
  bool empty() const { return count == 0; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline bool parse_number(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace detail
}  // namespace evdemand
