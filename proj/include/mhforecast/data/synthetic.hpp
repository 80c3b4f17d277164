#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mhforecast/data/calendar.hpp"
#include "mhforecast/data/csv.hpp"
#include "mhforecast/data/table.hpp"
#include "mhforecast/random.hpp"

namespace mhf::data {

struct SyntheticSpec {
  int days = 60;
  std::chrono::year_month_day start{std::chrono::year{2010}, std::chrono::January, std::chrono::day{1}};
  std::uint64_t seed = 1;
  /// Fraction of precipitation cells left blank (the column is meant to be dropped by cleaning).
  double precipitation_missing = 0.7;
  /// Fraction of temperature cells left blank.
  double temperature_missing = 0.003;
};

/**
 * Temperature-like hourly series: daily and annual sinusoids plus AR(1) noise, with
 * six weather channels correlated to it. Columns match the ingestion schema.
 */
inline TimeSeriesTable generate_synthetic_weather(const SyntheticSpec& spec) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> rain(1.5);

  TimeSeriesTable t;
  t.columns = table_columns(CsvSchema{});
  const HourStamp first = make_stamp(spec.start, 0);
  const int hours = spec.days * 24;
  double noise = 0.0, wind_noise = 0.0, pressure_noise = 0.0;
  std::vector<double> row(t.cols());
  for (int h = 0; h < hours; ++h) {
    const HourStamp stamp = first + h;
    const double daily = std::sin(two_pi * (hour_of_day(stamp) - 9) / 24.0);
    const double annual = std::sin(two_pi * (day_of_year(stamp) - 110) / 365.25);
    noise = 0.85 * noise + 0.6 * gauss(rng);
    wind_noise = 0.9 * wind_noise + 0.8 * gauss(rng);
    pressure_noise = 0.97 * pressure_noise + 0.05 * gauss(rng);

    const double temperature = 15.0 + 5.0 * daily + 4.0 * annual + noise;
    const double dew_point = temperature - 6.0 - 1.5 * daily + 0.5 * gauss(rng);
    const double humidity = std::clamp(70.0 - 12.0 * daily - 1.5 * noise + 2.0 * gauss(rng), 5.0, 100.0);
    const double wind = std::max(0.0, 12.0 + 4.0 * daily + 3.0 * wind_noise);
    const double visibility = std::clamp(20.0 + 0.1 * (temperature - dew_point) * 5.0 + gauss(rng), 0.5, 48.0);
    const double pressure = 101.0 - 0.05 * daily + pressure_noise;
    const double precipitation = unit(rng) < 0.1 ? rain(rng) : 0.0;

    row[0] = day_of_year(stamp);
    row[1] = hour_of_day(stamp);
    row[2] = unit(rng) < spec.temperature_missing && h > 0 ? kMissing : temperature;
    row[3] = dew_point;
    row[4] = humidity;
    row[5] = wind;
    row[6] = visibility;
    row[7] = pressure;
    row[8] = unit(rng) < spec.precipitation_missing ? kMissing : precipitation;
    t.append_row(stamp, row);
  }
  return t;
}

}  // namespace mhf::data
