#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mhforecast/data/table.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

enum class WindowLayout { sequential, flat };

/**
 * Supervised (input window, target horizon) pairs with stride 1.
 *
 * `inputs` is row-major (num_samples, lookback, num_features); the flat layout reads
 * the same storage as (num_samples, lookback * num_features). `targets` is
 * (num_samples, horizon).
 */
struct WindowedDataset {
  std::vector<double> inputs;
  std::vector<double> targets;
  std::size_t num_samples = 0;
  std::size_t lookback = 3;
  std::size_t horizon = 24;
  std::size_t num_features = 0;
  WindowLayout layout = WindowLayout::sequential;

  std::size_t input_width() const { return lookback * num_features; }

  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * input_width(), input_width());
  }
  std::span<const double> target(std::size_t i) const {
    return std::span<const double>(targets).subspan(i * horizon, horizon);
  }
};

inline std::size_t window_count(std::size_t series_length, std::size_t lookback, std::size_t horizon) {
  return series_length >= lookback + horizon ? series_length - lookback - horizon + 1 : 0;
}

inline WindowedDataset make_windows(const TimeSeriesTable& table, const std::string& target_column,
                                    std::size_t lookback = 3, std::size_t horizon = 24,
                                    WindowLayout layout = WindowLayout::sequential) {
  const std::size_t target = table.column_index(target_column);
  if (lookback == 0 || horizon == 0) throw Error(Errc::invalid_config, "lookback and horizon must be positive");
  if (table.rows() < lookback + horizon) {
    throw Error(Errc::series_too_short, std::to_string(table.rows()) + " rows < lookback + horizon = " +
                                            std::to_string(lookback + horizon));
  }
  WindowedDataset ds;
  ds.lookback = lookback;
  ds.horizon = horizon;
  ds.num_features = table.cols();
  ds.layout = layout;
  ds.num_samples = window_count(table.rows(), lookback, horizon);
  ds.inputs.reserve(ds.num_samples * ds.input_width());
  ds.targets.reserve(ds.num_samples * horizon);
  for (std::size_t i = 0; i < ds.num_samples; ++i) {
    ds.inputs.insert(ds.inputs.end(), table.values.begin() + i * table.cols(),
                     table.values.begin() + (i + lookback) * table.cols());
    for (std::size_t h = 0; h < horizon; ++h) ds.targets.push_back(table.at(i + lookback + h, target));
  }
  return ds;
}

/// Debug dump: `sample,x_<step>_<feature>...,y_<h>...`, one line per sample.
inline void write_dataset_csv(const std::filesystem::path& path, const WindowedDataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "sample";
  for (std::size_t t = 0; t < ds.lookback; ++t)
    for (std::size_t f = 0; f < ds.num_features; ++f) out << ",x_" << t << '_' << f;
  for (std::size_t h = 0; h < ds.horizon; ++h) out << ",y_" << h + 1;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < ds.num_samples; ++i) {
    out << i;
    for (double v : ds.input(i)) out << ',' << v;
    for (double v : ds.target(i)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace mhf::data
