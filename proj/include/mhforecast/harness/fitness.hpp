#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mhforecast/arima/model.hpp"
#include "mhforecast/data/clean.hpp"
#include "mhforecast/data/csv.hpp"
#include "mhforecast/data/scaler.hpp"
#include "mhforecast/data/split.hpp"
#include "mhforecast/data/synthetic.hpp"
#include "mhforecast/data/windows.hpp"
#include "mhforecast/evaluation/metrics.hpp"
#include "mhforecast/harness/config.hpp"
#include "mhforecast/nn/training.hpp"

namespace mhf::harness {

/**
 * Cleaned splits plus everything the models consume: scaled windows for the
 * networks and the unscaled target series for ARIMA and for scoring.
 */
struct PreparedData {
  data::TimeSeriesTable train, validation, test;  // cleaned, original units
  data::Scaler scaler;
  std::string target;
  std::size_t target_index = 0;
  std::size_t lookback = 3;
  std::size_t horizon = 24;
  data::WindowedDataset train_windows, validation_windows, test_windows;  // scaled, sequential layout
  /// Target in original units, train then validation then test.
  std::vector<double> series;

  std::size_t features() const { return train.cols(); }

  const data::WindowedDataset& windows(int split) const {
    return split == 0 ? train_windows : split == 1 ? validation_windows : test_windows;
  }

  /// Index into `series` of the last observed value for window i of a split.
  std::size_t origin(int split, std::size_t i) const {
    const std::size_t offset = split == 0 ? 0 : split == 1 ? train.rows() : train.rows() + validation.rows();
    return offset + i + lookback - 1;
  }
};

inline data::WindowedDataset with_layout(data::WindowedDataset ds, data::WindowLayout layout) {
  ds.layout = layout;
  return ds;
}

inline data::WindowLayout layout_for(ModelKind m) {
  return m == ModelKind::ann ? data::WindowLayout::flat : data::WindowLayout::sequential;
}

/// Builds windows and scaling from already cleaned and split tables.
inline PreparedData prepare_splits(data::TimeSeriesTable train, data::TimeSeriesTable validation,
                                   data::TimeSeriesTable test, const std::string& target, std::size_t lookback,
                                   std::size_t horizon) {
  PreparedData p;
  p.target = target;
  p.target_index = train.column_index(target);
  p.lookback = lookback;
  p.horizon = horizon;
  p.scaler = data::fit_scaler(train);
  auto windows = [&](const data::TimeSeriesTable& t) {
    return data::make_windows(data::scaler_apply(p.scaler, t, data::ScaleDirection::forward), target, lookback,
                              horizon);
  };
  p.train_windows = windows(train);
  p.validation_windows = windows(validation);
  p.test_windows = windows(test);
  for (const auto* t : {&train, &validation, &test}) {
    const auto col = t->column(p.target_index);
    p.series.insert(p.series.end(), col.begin(), col.end());
  }
  p.train = std::move(train);
  p.validation = std::move(validation);
  p.test = std::move(test);
  return p;
}

/// Whole calendar days split by fraction: the first share trains, the next validates, the rest tests.
inline data::SplitSpec fractional_split(const data::TimeSeriesTable& table, double train_fraction,
                                        double validation_fraction) {
  if (table.rows() == 0) throw Error(Errc::empty_file, "no rows to split");
  const auto first = data::to_days(table.timestamps.front());
  const auto last = data::to_days(table.timestamps.back());
  const long total = (last - first).count() + 1;
  const long train_days = std::lround(static_cast<double>(total) * train_fraction);
  const long val_days = std::lround(static_cast<double>(total) * validation_fraction);
  if (train_days < 1 || val_days < 1 || train_days + val_days >= total) {
    throw Error(Errc::empty_split, "only " + std::to_string(total) + " days; cannot split by fraction");
  }
  using D = std::chrono::days;
  using ymd = std::chrono::year_month_day;
  return {{ymd{first}, ymd{first + D{train_days - 1}}},
          {ymd{first + D{train_days}}, ymd{first + D{train_days + val_days - 1}}},
          {ymd{first + D{train_days + val_days}}, ymd{last}}};
}

/// Raw table per the config: the CSV file or the synthetic generator.
inline data::TimeSeriesTable load_raw(const ExperimentConfig& config) {
  if (config.data.synthetic) {
    return data::generate_synthetic_weather({.days = config.data.synthetic_days, .seed = config.data.synthetic_seed});
  }
  if (config.data.path.empty()) throw Error(Errc::invalid_config, "data.path is empty and synthetic is off");
  return data::load_weather_csv(config.data.path, config.data.schema);
}

inline data::Splits clean_and_split(const ExperimentConfig& config, const data::TimeSeriesTable& raw) {
  const auto clean = data::clean_missing(raw, config.data.drop_threshold, config.data.fill);
  const auto spec = config.split.dates
                        ? *config.split.dates
                        : fractional_split(clean, config.split.train_fraction, config.split.validation_fraction);
  return data::split_by_date(clean, spec);
}

inline PreparedData prepare(const ExperimentConfig& config) {
  auto splits = clean_and_split(config, load_raw(config));
  return prepare_splits(std::move(splits.train), std::move(splits.validation), std::move(splits.test),
                        config.data.target, config.lookback, config.horizon);
}

// ---------------------------------------------------------------------------
// prepared-data cache on disk

inline void save_prepared(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const data::Splits& splits) {
  std::filesystem::create_directories(dir);
  data::write_weather_csv(dir / "train.csv", splits.train);
  data::write_weather_csv(dir / "validation.csv", splits.validation);
  data::write_weather_csv(dir / "test.csv", splits.test);
  const json meta{{"target", config.data.target},
                  {"columns", splits.train.columns},
                  {"rows", {splits.train.rows(), splits.validation.rows(), splits.test.rows()}},
                  {"config_hash", config_hash(config)}};
  std::ofstream out(dir / "prepared.json");
  out << meta.dump(2) << '\n';
  if (!out) throw Error(Errc::io_error, "cannot write " + (dir / "prepared.json").string());
}

inline PreparedData load_prepared(const std::filesystem::path& dir, const ExperimentConfig& config) {
  std::ifstream in(dir / "prepared.json");
  if (!in) throw Error(Errc::io_error, "no prepared.json in " + dir.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("prepared.json: ") + e.what());
  }
  data::TimeSeriesTable t[3];
  const char* names[] = {"train.csv", "validation.csv", "test.csv"};
  for (int i = 0; i < 3; ++i) {
    // Cached splits are written with the calendar columns stripped, so rebuild the schema from the header.
    data::CsvSchema schema;
    schema.features.clear();
    for (const auto& c : meta.at("columns")) {
      const auto name = c.get<std::string>();
      if (name != data::kDayOfYearColumn && name != data::kHourColumn) schema.features.push_back(name);
    }
    t[i] = data::load_weather_csv(dir / names[i], schema);
  }
  return prepare_splits(std::move(t[0]), std::move(t[1]), std::move(t[2]), meta.at("target").get<std::string>(),
                        config.lookback, config.horizon);
}

// ---------------------------------------------------------------------------
// per-model train / score

inline nn::NetworkSpec network_spec(ModelKind m, const PreparedData& data) {
  nn::NetworkSpec s;
  s.kind = network_kind(m);
  s.features = data.features();
  s.lookback = data.lookback;
  s.horizon = data.horizon;
  return s;
}

inline nn::TrainingConfig training_config(const opt::Assignment& a, std::uint64_t seed) {
  return {.learning_rate = a.at("learning_rate"),
          .batch_size = static_cast<std::size_t>(a.at("batch_size")),
          .epochs = static_cast<std::size_t>(a.at("epochs")),
          .seed = seed};
}

inline arima::ArimaOrder arima_order(const opt::Assignment& a) {
  return {static_cast<int>(a.at("p")), static_cast<int>(a.at("d")), static_cast<int>(a.at("q"))};
}

inline std::vector<double> train_series(const PreparedData& data) {
  return {data.series.begin(), data.series.begin() + static_cast<std::ptrdiff_t>(data.train.rows())};
}

/// Forecasts (n x horizon, original units) for every window of a split.
inline std::vector<std::vector<double>> arima_split_forecasts(const arima::ArimaModel& model,
                                                              const PreparedData& data, int split) {
  const std::size_t n = data.windows(split).num_samples;
  std::vector<std::size_t> origins(n);
  for (std::size_t i = 0; i < n; ++i) origins[i] = data.origin(split, i);
  return arima::rolling_forecasts(model, data.series, origins, data.horizon);
}

/// Targets of a split's windows in original units, row-major (n x horizon).
inline std::vector<double> split_actuals(const PreparedData& data, int split) {
  const auto& ds = data.windows(split);
  std::vector<double> out(ds.targets.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data.scaler.inverse(data.target_index, ds.targets[i]);
  return out;
}

inline std::vector<double> flatten_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

/// Network predictions for a split, inverse-scaled, row-major (n x horizon).
inline std::vector<double> network_split_predictions(const nn::Network& model, const PreparedData& data, int split) {
  const auto ds = with_layout(data.windows(split), model.spec().kind == nn::NetworkKind::ann
                                                       ? data::WindowLayout::flat
                                                       : data::WindowLayout::sequential);
  const nn::Matrix pred = nn::predict_windows(model, ds);
  std::vector<double> out(static_cast<std::size_t>(pred.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index h = 0; h < pred.cols(); ++h) out[k++] = data.scaler.inverse(data.target_index, pred(i, h));
  return out;
}

inline nn::TrainResult train_network(ModelKind m, const PreparedData& data, const opt::Assignment& a,
                                     std::uint64_t seed) {
  const auto layout = layout_for(m);
  return nn::sgd_train(network_spec(m, data), with_layout(data.train_windows, layout),
                       with_layout(data.validation_windows, layout), training_config(a, seed));
}

inline arima::ArimaModel fit_arima_candidate(const PreparedData& data, const opt::Assignment& a) {
  return arima::fit_arima(train_series(data), arima_order(a));
}

/// Validation MSE of one-pass rolling forecasts, original units.
inline double arima_validation_mse(const arima::ArimaModel& model, const PreparedData& data) {
  return eval::mse(split_actuals(data, 1), flatten_rows(arima_split_forecasts(model, data, 1)));
}

/**
 * Candidate hyperparameters to validation MSE. Networks train on the train split
 * with a fixed seed (every candidate sees the same initialization stream) and are
 * scored in scaled units; ARIMA is fitted on the unscaled train target and scored
 * in original units. Any failure or non-finite score becomes +inf.
 */
inline opt::FitnessFn build_fitness(ModelKind m, const PreparedData& data, std::uint64_t training_seed) {
  return [m, &data, training_seed](const opt::Assignment& a) -> double {
    constexpr double inf = std::numeric_limits<double>::infinity();
    try {
      double f;
      if (m == ModelKind::arima) {
        f = arima_validation_mse(fit_arima_candidate(data, a), data);
      } else {
        f = train_network(m, data, a, training_seed).curve.validation_mse.back();
      }
      return std::isfinite(f) ? f : inf;
    } catch (const std::exception&) {
      return inf;
    }
  };
}

}  // namespace mhf::harness
