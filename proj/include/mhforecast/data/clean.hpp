#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhforecast/data/table.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

enum class FillPolicy { linear_interpolate, forward_fill };

namespace detail {

// Linear between known neighbours; edge gaps take the nearest known value.
inline void interpolate_column(TimeSeriesTable& t, std::size_t col) {
  const std::size_t n = t.rows();
  std::size_t prev = n;  // last known row, n = none yet
  for (std::size_t r = 0; r < n; ++r) {
    if (is_missing(t.at(r, col))) continue;
    if (prev == n) {
      for (std::size_t k = 0; k < r; ++k) t.at(k, col) = t.at(r, col);
    } else if (r > prev + 1) {
      const double a = t.at(prev, col), b = t.at(r, col);
      const double span = static_cast<double>(r - prev);
      for (std::size_t k = prev + 1; k < r; ++k) {
        t.at(k, col) = a + (b - a) * (static_cast<double>(k - prev) / span);
      }
    }
    prev = r;
  }
  for (std::size_t k = prev + 1; k < n; ++k) t.at(k, col) = t.at(prev, col);
}

inline void forward_fill_column(TimeSeriesTable& t, std::size_t col) {
  if (t.rows() > 0 && is_missing(t.at(0, col))) {
    throw Error(Errc::leading_gap_unfillable, "column '" + t.columns[col] + "' starts with a missing value");
  }
  for (std::size_t r = 1; r < t.rows(); ++r) {
    if (is_missing(t.at(r, col))) t.at(r, col) = t.at(r - 1, col);
  }
}

}  // namespace detail

/**
 * Drops every column whose missing fraction is at least `drop_threshold`, then fills
 * the remaining gaps. The result has no missing cells.
 */
inline TimeSeriesTable clean_missing(const TimeSeriesTable& table, double drop_threshold,
                                     FillPolicy policy = FillPolicy::linear_interpolate) {
  if (!(drop_threshold > 0.0 && drop_threshold <= 1.0)) {
    throw Error(Errc::invalid_config, "drop_threshold must lie in (0, 1]");
  }
  const std::size_t n = table.rows();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const double frac = n == 0 ? 0.0 : static_cast<double>(table.missing_count(c)) / static_cast<double>(n);
    if (frac < drop_threshold) keep.push_back(c);
  }
  if (keep.empty()) throw Error(Errc::all_columns_dropped, "every column exceeds the missing threshold");

  TimeSeriesTable out;
  out.timestamps = table.timestamps;
  for (auto c : keep) out.columns.push_back(table.columns[c]);
  out.values.reserve(n * keep.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (auto c : keep) out.values.push_back(table.at(r, c));
  }
  for (std::size_t c = 0; c < out.cols(); ++c) {
    if (out.missing_count(c) == 0) continue;
    if (policy == FillPolicy::forward_fill) {
      detail::forward_fill_column(out, c);
    } else {
      detail::interpolate_column(out, c);
    }
  }
  return out;
}

}  // namespace mhf::data
