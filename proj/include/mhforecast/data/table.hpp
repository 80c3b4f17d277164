#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mhforecast/data/calendar.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Calendar columns materialized from the date/time fields of the source CSV.
inline constexpr const char* kDayOfYearColumn = "day_of_year";
inline constexpr const char* kHourColumn = "hour";

/// Hourly multivariate observations. Values are row-major; NaN marks a missing cell.
struct TimeSeriesTable {
  std::vector<HourStamp> timestamps;
  std::vector<std::string> columns;
  std::vector<double> values;

  std::size_t rows() const { return timestamps.size(); }
  std::size_t cols() const { return columns.size(); }

  double& at(std::size_t row, std::size_t col) { return values[row * cols() + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * cols() + col]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }

  bool has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }

  std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(Errc::missing_column, "column '" + name + "' not in table");
    return static_cast<std::size_t>(it - columns.begin());
  }

  std::vector<double> column(const std::string& name) const { return column(column_index(name)); }

  std::vector<double> column(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, col);
    return out;
  }

  std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_missing));
  }

  std::size_t missing_count(std::size_t col) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows(); ++r) n += is_missing(at(r, col)) ? 1 : 0;
    return n;
  }

  /// Rows in [first, last), preserving order.
  TimeSeriesTable slice(std::size_t first, std::size_t last) const {
    TimeSeriesTable out;
    out.columns = columns;
    out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + last);
    out.values.assign(values.begin() + first * cols(), values.begin() + last * cols());
    return out;
  }

  void append_row(HourStamp stamp, std::span<const double> row_values) {
    timestamps.push_back(stamp);
    values.insert(values.end(), row_values.begin(), row_values.end());
  }

  bool operator==(const TimeSeriesTable& other) const {
    if (timestamps != other.timestamps || columns != other.columns ||
        values.size() != other.values.size()) {
      return false;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double a = values[i], b = other.values[i];
      if (!(a == b || (is_missing(a) && is_missing(b)))) return false;
    }
    return true;
  }
};

/// Concatenates tables with identical columns in the given order.
inline TimeSeriesTable concat(std::span<const TimeSeriesTable* const> parts) {
  TimeSeriesTable out;
  if (parts.empty()) return out;
  out.columns = parts.front()->columns;
  for (const auto* part : parts) {
    if (part->columns != out.columns) throw Error(Errc::shape_mismatch, "concat: column sets differ");
    out.timestamps.insert(out.timestamps.end(), part->timestamps.begin(), part->timestamps.end());
    out.values.insert(out.values.end(), part->values.begin(), part->values.end());
  }
  return out;
}

}  // namespace mhf::data
