#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mhforecast/harness/config.hpp"
#include "mhforecast/harness/fitness.hpp"

namespace mhf::harness {

struct ForecastSample {
  std::size_t window = 0;
  std::string origin;  // "YYYY-MM-DD HH" of the last observed hour
  std::vector<double> actual;
  std::vector<double> predicted;
};

/// One (optimizer, model, trial) outcome. `optimizer` is "GA", "DE", "PSO" or "Manual".
struct RunRecord {
  std::string optimizer;
  std::string model;
  std::size_t trial = 1;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool ok = false;
  std::string error;

  opt::Assignment best;
  double validation_fitness = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  std::size_t evaluations = 0;
  std::vector<opt::Evaluation> history;

  double test_mse = std::numeric_limits<double>::quiet_NaN();
  double test_mape = std::numeric_limits<double>::quiet_NaN();
  std::size_t test_points = 0;
  std::size_t test_excluded = 0;
  nn::LossCurve loss_curve;
  std::vector<ForecastSample> forecasts;

  double wall_seconds = 0.0;
};

/// Seed of one matrix cell; `tune` and `matrix` share it so the same cell reproduces.
inline std::uint64_t cell_seed(std::uint64_t master, std::string_view optimizer, ModelKind model, std::size_t trial) {
  return derive_seed(master, std::string(optimizer) + "/" + std::string(to_string(model)) + "/" + std::to_string(trial));
}

inline std::string format_stamp(data::HourStamp stamp) {
  const int h = data::hour_of_day(stamp);
  return data::format_date(stamp) + (h < 10 ? " 0" : " ") + std::to_string(h);
}

namespace detail {

inline std::vector<ForecastSample> forecast_samples(const PreparedData& data, const std::vector<double>& actual,
                                                    const std::vector<double>& predicted, std::size_t count) {
  std::vector<ForecastSample> out;
  const std::size_t n = data.test_windows.num_samples, h = data.horizon;
  for (std::size_t k = 0; k < count && k * 24 < n; ++k) {
    const std::size_t i = k * 24;
    ForecastSample s;
    s.window = i;
    s.origin = format_stamp(data.test.timestamps[i + data.lookback - 1]);
    s.actual.assign(actual.begin() + static_cast<std::ptrdiff_t>(i * h),
                    actual.begin() + static_cast<std::ptrdiff_t>((i + 1) * h));
    s.predicted.assign(predicted.begin() + static_cast<std::ptrdiff_t>(i * h),
                       predicted.begin() + static_cast<std::ptrdiff_t>((i + 1) * h));
    out.push_back(std::move(s));
  }
  return out;
}

/// Retrains `best` from scratch with a fresh seed and scores it on the test split.
inline void finish_record(RunRecord& rec, ModelKind model, const PreparedData& data, const opt::Assignment& best,
                          std::uint64_t retrain_seed, std::size_t samples, bool record_validation) {
  std::vector<double> predicted;
  if (model == ModelKind::arima) {
    const auto fitted = fit_arima_candidate(data, best);
    if (record_validation) rec.validation_fitness = arima_validation_mse(fitted, data);
    predicted = flatten_rows(arima_split_forecasts(fitted, data, 2));
  } else {
    auto trained = train_network(model, data, best, retrain_seed);
    if (record_validation) rec.validation_fitness = trained.curve.validation_mse.back();
    rec.loss_curve = std::move(trained.curve);
    predicted = network_split_predictions(trained.model, data, 2);
  }
  const auto actual = split_actuals(data, 2);
  const auto report = eval::evaluate(actual, predicted);
  if (!std::isfinite(report.mse) || !std::isfinite(report.mape)) {
    throw Error(Errc::non_finite_loss, "test metrics are not finite");
  }
  rec.test_mse = report.mse;
  rec.test_mape = report.mape;
  rec.test_points = report.sample_count;
  rec.test_excluded = report.excluded_count;
  rec.forecasts = forecast_samples(data, actual, predicted, samples);
  rec.ok = true;
}

}  // namespace detail

/**
 * Runs one cell. `optimizer` empty means the manual baseline, which evaluates its
 * fixed configuration exactly once. Failures are captured in the record.
 */
inline RunRecord run_cell(const ExperimentConfig& config, const PreparedData& data,
                          std::optional<opt::Algorithm> optimizer, ModelKind model, std::size_t trial) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.optimizer = optimizer ? std::string(opt::to_string(*optimizer)) : std::string(kManual);
  rec.model = std::string(to_string(model));
  rec.trial = trial;
  rec.seed = cell_seed(config.seed, rec.optimizer, model, trial);
  rec.config_hash = config_hash(config);
  try {
    const std::uint64_t retrain_seed = derive_seed(rec.seed, "retrain");
    if (optimizer) {
      auto oc = config.optimizer;
      oc.seed = derive_seed(rec.seed, "search");
      const auto fitness = build_fitness(model, data, derive_seed(rec.seed, "fitness"));
      auto result = opt::optimize(*optimizer, config.search.for_model(model), fitness, oc);
      rec.best = result.best;
      rec.validation_fitness = result.best_fitness;
      rec.trace = std::move(result.trace);
      rec.evaluations = result.evaluations;
      rec.history = std::move(result.history);
      if (!std::isfinite(rec.validation_fitness)) throw Error(Errc::non_finite_loss, "every candidate failed");
      detail::finish_record(rec, model, data, rec.best, retrain_seed, config.forecast_samples, false);
    } else {
      rec.best = config.manual.for_model(model);
      rec.evaluations = 1;
      detail::finish_record(rec, model, data, rec.best, retrain_seed, config.forecast_samples, true);
      rec.trace = {rec.validation_fitness};
      rec.history = {{0, rec.best, rec.validation_fitness}};
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

struct CellKey {
  std::optional<opt::Algorithm> optimizer;
  ModelKind model;
  std::size_t trial;
};

/// Matrix order: optimizers (manual last), then models, then trials.
inline std::vector<CellKey> matrix_cells(const ExperimentConfig& config) {
  std::vector<std::optional<opt::Algorithm>> rows(config.optimizers.begin(), config.optimizers.end());
  if (config.manual_baseline) rows.push_back(std::nullopt);
  std::vector<CellKey> cells;
  for (const auto& row : rows)
    for (auto m : config.models)
      for (std::size_t t = 1; t <= config.trials; ++t) cells.push_back({row, m, t});
  return cells;
}

/// MHF_WORKERS, when set to a positive integer, overrides the configured worker count.
inline std::size_t effective_workers(const ExperimentConfig& config) {
  if (const char* env = std::getenv("MHF_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, config.workers);
}

using ProgressFn = std::function<void(const RunRecord&, std::size_t done, std::size_t total)>;

/// Cells run on a worker pool; records come back in matrix order whatever the scheduling.
inline std::vector<RunRecord> run_matrix(const ExperimentConfig& config, const PreparedData& data,
                                         const ProgressFn& progress = {}) {
  config.validate();
  const auto cells = matrix_cells(config);
  std::vector<RunRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex report_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      records[i] = run_cell(config, data, cells[i].optimizer, cells[i].model, cells[i].trial);
      if (progress) {
        std::lock_guard lock(report_mutex);
        progress(records[i], ++done, cells.size());
      }
    }
  };
  const std::size_t threads = std::min(effective_workers(config), cells.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return records;
}

}  // namespace mhf::harness
