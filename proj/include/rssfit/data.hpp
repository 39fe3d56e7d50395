// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rssfit {

struct MeasurementRecord {
  double distance_m;
  double rss_db;
};

/// What the rss_db column is relative to: absolute dBm, or offsets from the
/// (possibly confidential) receiver sensitivity S.
enum class RssReference { absolute_dbm, relative_to_s };

struct Dataset {
  std::vector<MeasurementRecord> records;
  RssReference reference = RssReference::absolute_dbm;
  std::string source_tag;
  // Unrecognized "# key=value" comment lines, preserved through write_csv.
  std::vector<std::pair<std::string, std::string>> extra_metadata;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view field, int line_no, const char* what) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw std::runtime_error("CSV line " + std::to_string(line_no) + ": " + what +
                             " is not a number: '" + std::string(field) + "'");
  if (!std::isfinite(value))
    throw std::runtime_error("CSV line " + std::to_string(line_no) + ": " + what +
                             " is not finite");
  return value;
}

}  // namespace detail

inline std::string to_string(RssReference ref) {
  return ref == RssReference::absolute_dbm ? "absolute_dbm" : "relative_to_s";
}

inline RssReference rss_reference_from_string(std::string_view s) {
  if (s == "absolute_dbm") return RssReference::absolute_dbm;
  if (s == "relative_to_s") return RssReference::relative_to_s;
  throw std::runtime_error("unknown RSS reference '" + std::string(s) +
                           "' (expected absolute_dbm or relative_to_s)");
}

/// Parses the measurement CSV schema: optional "# key=value" comment lines,
/// then the exact header "distance_m,rss_db", then one record per line.
inline Dataset load_csv(std::istream& in) {
  Dataset ds;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (!header_seen && view.front() == '#') {
      view.remove_prefix(1);
      view = detail::trim(view);
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) continue;  // free-form comment
      const std::string key(detail::trim(view.substr(0, eq)));
      const std::string value(detail::trim(view.substr(eq + 1)));
      if (key == "reference") {
        try {
          ds.reference = rss_reference_from_string(value);
        } catch (const std::runtime_error& e) {
          throw std::runtime_error("CSV line " + std::to_string(line_no) + ": " + e.what());
        }
      } else if (key == "source_tag") {
        ds.source_tag = value;
      } else {
        ds.extra_metadata.emplace_back(key, value);
      }
      continue;
    }
    if (!header_seen) {
      if (view != "distance_m,rss_db")
        throw std::runtime_error("CSV line " + std::to_string(line_no) +
                                 ": expected header 'distance_m,rss_db', got '" +
                                 std::string(view) + "'");
      header_seen = true;
      continue;
    }
    const auto comma = view.find(',');
    if (comma == std::string_view::npos)
      throw std::runtime_error("CSV line " + std::to_string(line_no) +
                               ": expected 'distance_m,rss_db' record");
    MeasurementRecord rec{};
    rec.distance_m = detail::parse_double(view.substr(0, comma), line_no, "distance_m");
    rec.rss_db = detail::parse_double(view.substr(comma + 1), line_no, "rss_db");
    if (rec.distance_m < 0.0)
      throw std::runtime_error("CSV line " + std::to_string(line_no) +
                               ": distance_m must be non-negative");
    ds.records.push_back(rec);
  }
  if (!header_seen) throw std::runtime_error("CSV: missing 'distance_m,rss_db' header");
  if (ds.records.empty()) throw std::runtime_error("CSV: no data rows after the header");
  return ds;
}

inline void write_csv(std::ostream& out, const Dataset& ds) {
  out << "# reference=" << to_string(ds.reference) << "\n";
  if (!ds.source_tag.empty()) out << "# source_tag=" << ds.source_tag << "\n";
  for (const auto& [key, value] : ds.extra_metadata) out << "# " << key << "=" << value << "\n";
  out << "distance_m,rss_db\n";
  char buf[64];
  for (const MeasurementRecord& rec : ds.records) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", rec.distance_m, rec.rss_db);
    out << buf << "\n";
  }
}

/// Keeps records with min_m <= distance <= max_m (closed interval).
inline Dataset filter_distance(const Dataset& ds, double min_m, double max_m) {
  if (!(min_m <= max_m))
    throw std::invalid_argument("filter_distance: window minimum exceeds maximum");
  Dataset out = ds;
  out.records.clear();
  for (const MeasurementRecord& rec : ds.records) {
    if (rec.distance_m >= min_m && rec.distance_m <= max_m) out.records.push_back(rec);
  }
  if (out.records.empty())
    throw std::runtime_error("filter_distance: no records in the distance window [" +
                             std::to_string(min_m) + ", " + std::to_string(max_m) + "] m");
  return out;
}

/// Sorted linear amplitudes plus the dB reference that maps them back:
/// rss_db = amp_ref_dbm + 20 log10(r). The reference is the dB-domain mean of
/// the dataset, so amplitudes are normalized around 1.
struct AmplitudeData {
  std::vector<double> amplitudes;
  double amp_ref_dbm;
};

inline AmplitudeData to_amplitudes(const Dataset& ds) {
  if (ds.records.empty()) throw std::invalid_argument("to_amplitudes: dataset is empty");
  double mean = 0.0;
  for (const MeasurementRecord& rec : ds.records) mean += rec.rss_db;
  mean /= static_cast<double>(ds.records.size());
  AmplitudeData out;
  out.amp_ref_dbm = mean;
  out.amplitudes.reserve(ds.records.size());
  for (const MeasurementRecord& rec : ds.records)
    out.amplitudes.push_back(std::pow(10.0, (rec.rss_db - mean) / 20.0));
  std::sort(out.amplitudes.begin(), out.amplitudes.end());
  return out;
}

/// Step-function empirical CDF: F(x) = (#values <= x) / n, right-continuous.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("EmpiricalCdf: need at least one value");
    std::sort(values_.begin(), values_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
  }

  const std::vector<double>& sorted_values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

inline EmpiricalCdf ecdf(std::vector<double> values) { return EmpiricalCdf(std::move(values)); }

}  // namespace rssfit
