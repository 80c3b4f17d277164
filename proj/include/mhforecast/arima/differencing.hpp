#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mhforecast/error.hpp"

namespace mhf::arima {

struct Differenced {
  std::vector<double> values;
  /// First value of each level before it was differenced (level 0 = the input).
  std::vector<double> seeds;
};

inline Differenced difference(std::span<const double> series, std::size_t d) {
  if (series.size() <= d) {
    throw Error(Errc::series_too_short, "series of length " + std::to_string(series.size()) +
                                            " cannot be differenced " + std::to_string(d) + " times");
  }
  Differenced out{std::vector<double>(series.begin(), series.end()), {}};
  for (std::size_t level = 0; level < d; ++level) {
    auto& v = out.values;
    out.seeds.push_back(v.front());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
  }
  return out;
}

inline std::vector<double> inverse_difference(std::span<const double> differenced, std::span<const double> seeds,
                                              std::size_t d) {
  if (seeds.size() != d) {
    throw Error(Errc::seed_mismatch, "expected " + std::to_string(d) + " seeds, got " + std::to_string(seeds.size()));
  }
  std::vector<double> cur(differenced.begin(), differenced.end());
  for (std::size_t level = d; level-- > 0;) {
    std::vector<double> up(cur.size() + 1);
    up[0] = seeds[level];
    for (std::size_t i = 0; i < cur.size(); ++i) up[i + 1] = up[i] + cur[i];
    cur = std::move(up);
  }
  return cur;
}

inline std::vector<double> inverse_difference(const Differenced& diff) {
  return inverse_difference(diff.values, diff.seeds, diff.seeds.size());
}

/// Integrates differenced-scale forecasts; `anchors[k]` is the last observed value of level k.
inline std::vector<double> integrate_forecast(std::span<const double> forecast, std::span<const double> anchors) {
  std::vector<double> cur(forecast.begin(), forecast.end());
  for (std::size_t level = anchors.size(); level-- > 0;) {
    double acc = anchors[level];
    for (double& v : cur) {
      acc += v;
      v = acc;
    }
  }
  return cur;
}

/// Last value of each differencing level 0..d-1.
inline std::vector<double> level_tails(std::span<const double> series, std::size_t d) {
  std::vector<double> tails;
  std::vector<double> cur(series.begin(), series.end());
  for (std::size_t level = 0; level < d; ++level) {
    tails.push_back(cur.back());
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) cur[i] = cur[i + 1] - cur[i];
    cur.pop_back();
  }
  return tails;
}

}  // namespace mhf::arima
