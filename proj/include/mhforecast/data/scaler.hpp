#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mhforecast/data/table.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

enum class ScaleDirection { forward, inverse };

/// Per-column standardizer with population (divide-by-n) moments.
struct Scaler {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;

  double forward(std::size_t col, double x) const { return (x - mean[col]) / stddev[col]; }
  double inverse(std::size_t col, double z) const { return z * stddev[col] + mean[col]; }
};

inline Scaler fit_scaler(const TimeSeriesTable& train) {
  if (train.rows() == 0) throw Error(Errc::empty_split, "cannot fit scaler on an empty table");
  if (train.missing_count() != 0) throw Error(Errc::invalid_config, "clean missing values before fitting");
  const std::size_t n = train.rows(), k = train.cols();
  Scaler s{train.columns, std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += train.at(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = train.at(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw Error(Errc::constant_column, "column '" + train.columns[c] + "' has zero variance");
    }
    s.mean[c] = mean;
    s.stddev[c] = sd;
  }
  return s;
}

inline TimeSeriesTable scaler_apply(const Scaler& scaler, const TimeSeriesTable& table, ScaleDirection direction) {
  if (table.cols() != scaler.mean.size()) {
    throw Error(Errc::shape_mismatch, "scaler fitted on " + std::to_string(scaler.mean.size()) +
                                          " columns, table has " + std::to_string(table.cols()));
  }
  TimeSeriesTable out = table;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double& v = out.at(r, c);
      v = direction == ScaleDirection::forward ? scaler.forward(c, v) : scaler.inverse(c, v);
    }
  }
  return out;
}

}  // namespace mhf::data
