#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mhforecast/data/calendar.hpp"
#include "mhforecast/data/table.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

/// Weather columns in source order.
inline std::vector<std::string> default_weather_columns() {
  return {"temperature", "dew_point", "relative_humidity", "wind_speed",
          "visibility",  "pressure",  "precipitation"};
}

struct CsvSchema {
  std::string date_column = "date";
  std::string time_column = "time";
  std::vector<std::string> features = default_weather_columns();
  /// Prepend day-of-year and hour-of-day as numeric columns.
  bool calendar_columns = true;
  /// Insert all-missing rows for skipped hours instead of failing.
  bool tolerate_gaps = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_cell(std::string_view cell) {
  if (cell.empty()) return kMissing;
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) return kMissing;
  return v;
}

inline void fill_calendar(std::vector<double>& row, HourStamp stamp) {
  row[0] = day_of_year(stamp);
  row[1] = hour_of_day(stamp);
}

}  // namespace detail

inline std::vector<std::string> table_columns(const CsvSchema& schema) {
  std::vector<std::string> cols;
  if (schema.calendar_columns) {
    cols.emplace_back(kDayOfYearColumn);
    cols.emplace_back(kHourColumn);
  }
  cols.insert(cols.end(), schema.features.begin(), schema.features.end());
  return cols;
}

inline TimeSeriesTable read_weather_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) {
    throw Error(Errc::empty_file, "no header row");
  }
  const auto header = detail::split_fields(line);
  auto locate = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(Errc::missing_column, "CSV lacks column '" + name + "'");
  };
  const std::size_t date_idx = locate(schema.date_column);
  const std::size_t time_idx = locate(schema.time_column);
  std::vector<std::size_t> feature_idx;
  for (const auto& f : schema.features) feature_idx.push_back(locate(f));

  TimeSeriesTable table;
  table.columns = table_columns(schema);
  const std::size_t offset = schema.calendar_columns ? 2 : 0;
  std::vector<double> row(table.cols());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    auto field = [&](std::size_t i) { return i < fields.size() ? fields[i] : std::string_view{}; };

    const auto date = parse_date(field(date_idx));
    const auto hour = parse_hour(field(time_idx));
    if (!date || !hour) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad date/time");
    }
    const HourStamp stamp = make_stamp(*date, *hour);

    if (!table.timestamps.empty()) {
      const HourStamp prev = table.timestamps.back();
      if (stamp <= prev) {
        throw Error(Errc::timestamp_disorder,
                    "line " + std::to_string(line_no) + ": timestamp not after previous row");
      }
      if (stamp > prev + 1) {
        if (!schema.tolerate_gaps) {
          throw Error(Errc::timestamp_gap, "line " + std::to_string(line_no) + ": " +
                                               std::to_string(stamp - prev - 1) + " hour(s) missing");
        }
        for (HourStamp s = prev + 1; s < stamp; ++s) {
          std::fill(row.begin(), row.end(), kMissing);
          if (schema.calendar_columns) detail::fill_calendar(row, s);
          table.append_row(s, row);
        }
      }
    }
    if (schema.calendar_columns) detail::fill_calendar(row, stamp);
    for (std::size_t f = 0; f < feature_idx.size(); ++f) {
      row[offset + f] = detail::parse_cell(field(feature_idx[f]));
    }
    table.append_row(stamp, row);
  }
  if (table.rows() == 0) throw Error(Errc::empty_file, "no data rows");
  return table;
}

inline TimeSeriesTable load_weather_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return read_weather_csv(in, schema);
}

/// Writes the table in the source layout (`date,time,<non-calendar columns>`). Missing cells are empty.
inline void write_weather_csv(std::ostream& out, const TimeSeriesTable& table) {
  std::vector<std::size_t> data_cols;
  out << "date,time";
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.columns[c] == kDayOfYearColumn || table.columns[c] == kHourColumn) continue;
    data_cols.push_back(c);
    out << ',' << table.columns[c];
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << format_date(table.timestamps[r]) << ',' << hour_of_day(table.timestamps[r]);
    for (auto c : data_cols) {
      out << ',';
      if (!is_missing(table.at(r, c))) out << table.at(r, c);
    }
    out << '\n';
  }
}

inline void write_weather_csv(const std::filesystem::path& path, const TimeSeriesTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  write_weather_csv(out, table);
}

/// Schema that re-reads a table previously written with write_weather_csv.
inline CsvSchema schema_for(const TimeSeriesTable& table) {
  CsvSchema schema;
  schema.features.clear();
  schema.calendar_columns = table.has_column(kDayOfYearColumn);
  for (const auto& c : table.columns) {
    if (c != kDayOfYearColumn && c != kHourColumn) schema.features.push_back(c);
  }
  return schema;
}

}  // namespace mhf::data
