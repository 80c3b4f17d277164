#pragma once

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhforecast/harness/config.hpp"
#include "mhforecast/harness/fitness.hpp"
#include "mhforecast/harness/matrix.hpp"
#include "mhforecast/harness/reports.hpp"
#include "mhforecast/harness/selftest.hpp"

namespace mhf::harness {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_run = 3 };

namespace detail {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> trials;
  bool synthetic = false;
  std::string prepared;
};

/// A usage problem in the user's input, as opposed to a data or run failure.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The configured data file is absent; reported as a data error.
struct MissingData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "master seed override");
  cmd->add_option("--out", o.out, "output directory override");
  cmd->add_option("--trials", o.trials, "trial count override")->check(CLI::PositiveNumber);
  cmd->add_flag("--synthetic", o.synthetic, "use the built-in synthetic weather series");
  cmd->add_option("--prepared", o.prepared, "directory written by `prepare`");
}

inline ExperimentConfig resolve_config(const CommonOptions& o, bool need_source) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    if (!std::filesystem::exists(o.config)) throw UsageError("config file not found: " + o.config);
    try {
      c = load_config(o.config);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  } else if (need_source && !o.synthetic && o.prepared.empty()) {
    throw UsageError("one of --config, --synthetic or --prepared is required");
  }
  if (o.synthetic) c.data.synthetic = true;
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (!o.out.empty()) c.output = o.out;
  if (need_source && o.prepared.empty() && !c.data.synthetic) {
    if (c.data.path.empty()) throw UsageError("config names no data.path and synthetic is off");
    if (!std::filesystem::exists(c.data.path)) throw MissingData("data file not found: " + c.data.path);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

inline PreparedData load_data(const ExperimentConfig& c, const CommonOptions& o) {
  return o.prepared.empty() ? prepare(c) : load_prepared(o.prepared, c);
}

inline std::string describe(const opt::Assignment& a) {
  std::ostringstream s;
  for (std::size_t i = 0; i < a.values.size(); ++i) s << (i ? " " : "") << a.values[i].first << '=' << a.values[i].second;
  return s.str();
}

inline void print_summary(std::ostream& out, const RunRecord& r) {
  out << r.optimizer << ' ' << r.model << " trial " << r.trial << ": ";
  if (!r.ok) {
    out << "FAILED (" << r.error << ")\n";
    return;
  }
  out << describe(r.best) << " | validation " << r.validation_fitness << " | test MSE " << r.test_mse << " MAPE "
      << r.test_mape << "% | " << r.evaluations << " evaluations, " << std::fixed << std::setprecision(1)
      << r.wall_seconds << " s\n"
      << std::defaultfloat << std::setprecision(6);
}

}  // namespace detail

/**
 * Subcommands: prepare, tune, matrix, report, selftest.
 * Exit codes: 0 success, 1 usage, 2 data error, 3 run failure.
 */
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Metaheuristic hyperparameter tuning for hourly temperature forecasting"};
  app.require_subcommand(1);

  detail::CommonOptions prep_opts, tune_opts, matrix_opts, report_opts;
  auto* prep = app.add_subcommand("prepare", "ingest, clean and split; cache the splits to --out");
  detail::add_common(prep, prep_opts);

  auto* tune = app.add_subcommand("tune", "one optimizer x model cell");
  detail::add_common(tune, tune_opts);
  std::string model_name, optimizer_name;
  std::size_t trial = 1;
  tune->add_option("--model", model_name, "ANN, LSTM, GRU or ARIMA")->required();
  tune->add_option("--optimizer", optimizer_name, "GA, DE, PSO or manual")->required();
  tune->add_option("--trial", trial, "trial index (selects the cell seed)")->check(CLI::PositiveNumber);

  auto* matrix = app.add_subcommand("matrix", "full optimizer x model x trial benchmark");
  detail::add_common(matrix, matrix_opts);
  bool quiet = false;
  matrix->add_flag("--quiet", quiet, "no per-cell progress");

  auto* report = app.add_subcommand("report", "re-emit tables from a records.jsonl");
  std::string records_path, report_out;
  report->add_option("--records", records_path, "records.jsonl (default: <out>/records.jsonl)");
  report->add_option("--out", report_out, "output directory")->required();

  auto* self = app.add_subcommand("selftest", "invariant checks on synthetic data");
  std::uint64_t self_seed = 1;
  self->add_option("--seed", self_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*prep) {
      auto c = detail::resolve_config(prep_opts, true);
      const std::filesystem::path dir = prep_opts.out.empty() ? std::filesystem::path(c.output) / "prepared"
                                                              : std::filesystem::path(prep_opts.out);
      const auto splits = clean_and_split(c, load_raw(c));
      save_prepared(dir, c, splits);
      // Fail now rather than at tune time if the splits cannot be windowed or scaled.
      (void)prepare_splits(splits.train, splits.validation, splits.test, c.data.target, c.lookback, c.horizon);
      out << "prepared " << splits.train.rows() << '/' << splits.validation.rows() << '/' << splits.test.rows()
          << " rows (" << splits.train.cols() << " features) in " << dir.string() << '\n';
      return exit_ok;
    }

    if (*tune) {
      auto c = detail::resolve_config(tune_opts, true);
      const auto model = parse_model(model_name);
      if (!model) throw detail::UsageError("unknown model '" + model_name + "'");
      std::optional<opt::Algorithm> alg;
      if (lowercase(optimizer_name) != "manual") {
        alg = opt::parse_algorithm(optimizer_name);
        if (!alg) throw detail::UsageError("unknown optimizer '" + optimizer_name + "'");
        c.optimizer.validate(*alg);
      }
      const auto data = detail::load_data(c, tune_opts);
      const auto rec = run_cell(c, data, alg, *model, trial);
      detail::print_summary(out, rec);
      emit_reports({rec}, c.output);
      return rec.ok ? exit_ok : exit_run;
    }

    if (*matrix) {
      auto c = detail::resolve_config(matrix_opts, true);
      const auto data = detail::load_data(c, matrix_opts);
      ProgressFn progress;
      if (!quiet) {
        progress = [&err](const RunRecord& r, std::size_t done, std::size_t total) {
          err << '[' << done << '/' << total << "] ";
          detail::print_summary(err, r);
        };
      }
      const auto records = run_matrix(c, data, progress);
      emit_reports(records, c.output);
      std::ostringstream table;
      write_mape_table(table, summarize(records));
      out << table.str();
      const bool all_ok = std::all_of(records.begin(), records.end(), [](const RunRecord& r) { return r.ok; });
      return all_ok ? exit_ok : exit_run;
    }

    if (*report) {
      const std::filesystem::path src =
          records_path.empty() ? std::filesystem::path(report_out) / "records.jsonl" : std::filesystem::path(records_path);
      if (!std::filesystem::exists(src)) throw detail::UsageError("records file not found: " + src.string());
      const auto records = read_records(src);
      const bool same_place = std::filesystem::absolute(src) == std::filesystem::absolute(report_out) / "records.jsonl";
      emit_reports(records, report_out, !same_place);
      std::ostringstream table;
      write_mape_table(table, summarize(records));
      out << table.str();
      return exit_ok;
    }

    if (*self) return run_selftest(out, self_seed) ? exit_ok : exit_run;
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_usage;
  } catch (const detail::MissingData& e) {
    err << "error: " << e.what() << '\n';
    return exit_data;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_data_error() ? exit_data : exit_run;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_run;
  }
  return exit_usage;
}

}  // namespace mhf::harness
