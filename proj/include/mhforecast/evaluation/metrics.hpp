#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "mhforecast/error.hpp"

namespace mhf::eval {

struct MapeResult {
  double percent = 0.0;
  std::size_t excluded = 0;
};

struct MetricReport {
  double mse = 0.0;
  double mape = 0.0;  // percent
  std::size_t sample_count = 0;
  std::size_t excluded_count = 0;
};

namespace detail {
inline void check_shapes(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::shape_mismatch,
                "actuals have " + std::to_string(a.size()) + " points, predictions " + std::to_string(b.size()));
  }
  if (a.empty()) throw Error(Errc::empty_input, "no points to score");
}
}  // namespace detail

inline double mse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_shapes(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    s += e * e;
  }
  return s / static_cast<double>(actual.size());
}

/// Percent error over points with |actual| >= zero_floor; the rest are counted as excluded.
inline MapeResult mape(std::span<const double> actual, std::span<const double> predicted, double zero_floor = 0.1) {
  detail::check_shapes(actual, predicted);
  double s = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double a = std::abs(actual[i]);
    if (a < zero_floor) continue;
    s += std::abs(actual[i] - predicted[i]) / a;
    ++used;
  }
  if (used == 0) throw Error(Errc::all_excluded, "every actual lies below the MAPE floor");
  return {100.0 * s / static_cast<double>(used), actual.size() - used};
}

inline MetricReport evaluate(std::span<const double> actual, std::span<const double> predicted,
                             double zero_floor = 0.1) {
  const auto m = mape(actual, predicted, zero_floor);
  return {mse(actual, predicted), m.percent, actual.size(), m.excluded};
}

}  // namespace mhf::eval
