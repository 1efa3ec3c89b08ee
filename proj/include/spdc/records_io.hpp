#pragma once

// CSV and key-value text formats.
//
// Count-record CSV: header line then one row per setting, LF endings,
// columns alpha_deg,beta_deg,duration_s,n_A,n_B,n_coinc (anglescan files use
// theta_A_deg,theta_B_deg in place of the two polarizer angles).
// Event trace CSV: time_s,channel,origin.

#include <charconv>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "spdc/analysis.hpp"
#include "spdc/detection_electronics.hpp"
#include "spdc/error.hpp"

namespace spdc {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw CsvError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline constexpr std::string_view kPolarizerColumns = "alpha_deg,beta_deg,duration_s,n_A,n_B,n_coinc";
inline constexpr std::string_view kAngleScanColumns = "theta_A_deg,theta_B_deg,duration_s,n_A,n_B,n_coinc";

/// Writes records with the given header; the first two columns hold alpha/beta.
inline void write_count_records(std::ostream& os, std::span<const CountRecord> records,
                                std::string_view header = kPolarizerColumns) {
  os << header << '\n';
  for (const auto& r : records) {
    os << format_number(r.alpha_deg) << ',' << format_number(r.beta_deg) << ',' << format_number(r.duration_s) << ','
       << format_number(r.n_a) << ',' << format_number(r.n_b) << ',' << format_number(r.n_coinc) << '\n';
  }
}

inline std::vector<CountRecord> read_count_records(std::istream& is, std::string_view header = kPolarizerColumns) {
  std::string line;
  if (!std::getline(is, line)) throw CsvError("count CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw CsvError("count CSV: expected header '" + std::string(header) + "', got '" + line + "'");
  std::vector<CountRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw CsvError("count CSV line " + std::to_string(lineno) + ": expected 6 columns");
    try {
      CountRecord r{parse_number(cells[0]), parse_number(cells[1]), parse_number(cells[2]),
                    parse_number(cells[3]), parse_number(cells[4]), parse_number(cells[5])};
      if (!(r.duration_s > 0.0)) throw CsvError("non-positive duration");
      if (r.n_a < 0.0 || r.n_b < 0.0 || r.n_coinc < 0.0) throw CsvError("negative count");
      out.push_back(r);
    } catch (const CsvError& e) {
      throw CsvError("count CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_event_trace(std::ostream& os, std::span<const DetectionEvent> events) {
  os << "time_s,channel,origin\n";
  for (const auto& e : events) os << format_number(e.time_s) << ',' << to_string(e.channel) << ',' << to_string(e.origin) << '\n';
}

/// Result documents: one "key: value" line per entry, in insertion order.
class ResultDocument {
 public:
  void add(std::string key, double value) { entries_.emplace_back(std::move(key), format_number(value)); }
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  friend std::ostream& operator<<(std::ostream& os, const ResultDocument& doc) {
    for (const auto& [k, v] : doc.entries_) os << k << ": " << v << '\n';
    return os;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace spdc
