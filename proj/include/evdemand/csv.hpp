#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evdemand/core.hpp"

namespace evdemand::csv {

/// One data row together with its 1-based data-row index (header excluded).
struct Row {
  std::size_t index;
  std::string_view text;
};

/// Splits `text` into lines, drops the header and blank lines.
inline std::vector<Row> data_rows(std::string_view text) {
  std::vector<Row> rows;
  bool header_seen = false;
  std::size_t index = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back({++index, line});
  }
  return rows;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void fail(std::string_view table, std::size_t row, const std::string& what) {
  throw Error(std::string(table) + " row " + std::to_string(row) + ": " + what);
}

template <typename T>
T field(std::string_view table, const Row& row, std::string_view text, std::string_view name) {
  T value{};
  if (!detail::parse_number(text, value))
    fail(table, row.index, "malformed " + std::string(name) + " '" + std::string(detail::trim(text)) + "'");
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("failed writing file: " + path);
}

}  // namespace evdemand::csv
