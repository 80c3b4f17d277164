#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "mhforecast/harness/matrix.hpp"

namespace mhf::harness {

// Non-finite numbers have no JSON literal; they are written as null. A null
// fitness reads back as +inf (a failed candidate), a null metric as NaN.

namespace detail {

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

inline json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

inline std::vector<double> numbers_or(const json& j, double fallback) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_or(x, fallback));
  return out;
}

inline json assignment_json(const opt::Assignment& a) {
  json out = json::object();
  for (const auto& [k, v] : a.values) out[k] = v;
  return out;
}

inline opt::Assignment assignment_value(const json& j) {
  opt::Assignment a;
  for (const auto& [k, v] : j.items()) a.values.emplace_back(k, v.get<double>());
  return a;
}

/// Shortest text that reads back to the same double; NaN renders as an empty cell.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline json record_to_json(const RunRecord& r) {
  json history = json::array();
  for (const auto& e : r.history) {
    history.push_back(
        {{"generation", e.generation}, {"params", detail::assignment_json(e.assignment)}, {"fitness", detail::number(e.fitness)}});
  }
  json forecasts = json::array();
  for (const auto& f : r.forecasts) {
    forecasts.push_back({{"window", f.window},
                         {"origin", f.origin},
                         {"actual", detail::numbers(f.actual)},
                         {"predicted", detail::numbers(f.predicted)}});
  }
  return {{"optimizer", r.optimizer},
          {"model", r.model},
          {"trial", r.trial},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"status", r.ok ? "ok" : "failed"},
          {"error", r.error},
          {"best", detail::assignment_json(r.best)},
          {"validation_fitness", detail::number(r.validation_fitness)},
          {"test_mse", detail::number(r.test_mse)},
          {"test_mape", detail::number(r.test_mape)},
          {"test_points", r.test_points},
          {"test_excluded", r.test_excluded},
          {"evaluations", r.evaluations},
          {"trace", detail::numbers(r.trace)},
          {"history", history},
          {"loss_curve", {{"train", detail::numbers(r.loss_curve.train_mse)},
                          {"validation", detail::numbers(r.loss_curve.validation_mse)}}},
          {"forecasts", forecasts},
          {"wall_seconds", r.wall_seconds}};
}

inline RunRecord record_from_json(const json& j) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  RunRecord r;
  try {
    r.optimizer = j.at("optimizer").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.trial = j.at("trial").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.error = j.value("error", "");
    r.best = detail::assignment_value(j.at("best"));
    r.validation_fitness = detail::number_or(j.at("validation_fitness"), inf);
    r.test_mse = detail::number_or(j.at("test_mse"), nan);
    r.test_mape = detail::number_or(j.at("test_mape"), nan);
    r.test_points = j.value("test_points", std::size_t{0});
    r.test_excluded = j.value("test_excluded", std::size_t{0});
    r.evaluations = j.value("evaluations", std::size_t{0});
    r.trace = detail::numbers_or(j.at("trace"), inf);
    for (const auto& e : j.at("history")) {
      r.history.push_back({e.at("generation").get<std::size_t>(), detail::assignment_value(e.at("params")),
                           detail::number_or(e.at("fitness"), inf)});
    }
    r.loss_curve.train_mse = detail::numbers_or(j.at("loss_curve").at("train"), nan);
    r.loss_curve.validation_mse = detail::numbers_or(j.at("loss_curve").at("validation"), nan);
    for (const auto& f : j.at("forecasts")) {
      r.forecasts.push_back({f.at("window").get<std::size_t>(), f.at("origin").get<std::string>(),
                             detail::numbers_or(f.at("actual"), nan), detail::numbers_or(f.at("predicted"), nan)});
    }
    r.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("run record: ") + e.what());
  }
  return r;
}

inline void write_records(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// tables

struct CellSummary {
  std::string optimizer;
  std::string model;
  std::vector<const RunRecord*> runs;

  bool failed() const {
    return std::any_of(runs.begin(), runs.end(), [](const RunRecord* r) { return !r->ok; });
  }
  double mean_mape() const {
    double s = 0.0;
    for (const auto* r : runs) s += r->test_mape;
    return s / static_cast<double>(runs.size());
  }
  /// Lowest validation fitness among completed runs.
  const RunRecord* best() const {
    const RunRecord* b = nullptr;
    for (const auto* r : runs)
      if (r->ok && (!b || r->validation_fitness < b->validation_fitness)) b = r;
    return b;
  }
};

struct MatrixSummary {
  std::vector<std::string> optimizers;  // first-appearance order
  std::vector<std::string> models;
  std::vector<CellSummary> cells;

  const CellSummary* find(const std::string& optimizer, const std::string& model) const {
    for (const auto& c : cells)
      if (c.optimizer == optimizer && c.model == model) return &c;
    return nullptr;
  }
};

inline MatrixSummary summarize(const std::vector<RunRecord>& records) {
  MatrixSummary s;
  auto note = [](std::vector<std::string>& xs, const std::string& x) {
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
  };
  for (const auto& r : records) {
    note(s.optimizers, r.optimizer);
    note(s.models, r.model);
    auto it = std::find_if(s.cells.begin(), s.cells.end(),
                           [&](const CellSummary& c) { return c.optimizer == r.optimizer && c.model == r.model; });
    if (it == s.cells.end()) {
      s.cells.push_back({r.optimizer, r.model, {}});
      it = s.cells.end() - 1;
    }
    it->runs.push_back(&r);
  }
  return s;
}

/// Mean test MAPE per (optimizer, model); a cell with any failed run reads "failed".
inline void write_mape_table(std::ostream& out, const MatrixSummary& s) {
  out << "optimizer";
  for (const auto& m : s.models) out << ',' << m;
  out << '\n';
  for (const auto& o : s.optimizers) {
    out << o;
    for (const auto& m : s.models) {
      out << ',';
      if (const auto* c = s.find(o, m)) out << (c->failed() ? std::string("failed") : detail::fmt(c->mean_mape()));
    }
    out << '\n';
  }
}

inline void write_best_hyperparameters(std::ostream& out, const MatrixSummary& s) {
  const char* params[] = {"learning_rate", "batch_size", "epochs", "p", "d", "q"};
  out << "optimizer,model,trial";
  for (const char* p : params) out << ',' << p;
  out << ",validation_fitness,test_mse,test_mape\n";
  for (const auto& c : s.cells) {
    out << c.optimizer << ',' << c.model << ',';
    const RunRecord* b = c.best();
    if (!b) {
      out << "failed,,,,,,,,,\n";
      continue;
    }
    out << b->trial;
    for (const char* p : params) out << ',' << (b->best.contains(p) ? detail::fmt(b->best.at(p)) : "");
    out << ',' << detail::fmt(b->validation_fitness) << ',' << detail::fmt(b->test_mse) << ','
        << detail::fmt(b->test_mape) << '\n';
  }
}

inline void write_forecast(std::ostream& out, const RunRecord& r) {
  out << "optimizer,model,trial,window,origin,series";
  const std::size_t h = r.forecasts.empty() ? 0 : r.forecasts.front().actual.size();
  for (std::size_t k = 1; k <= h; ++k) out << ",h" << k;
  out << '\n';
  for (const auto& f : r.forecasts) {
    for (const auto* series : {&f.actual, &f.predicted}) {
      out << r.optimizer << ',' << r.model << ',' << r.trial << ',' << f.window << ',' << f.origin << ','
          << (series == &f.actual ? "actual" : "predicted");
      for (double v : *series) out << ',' << detail::fmt(v);
      out << '\n';
    }
  }
}

/// Per-epoch curves of the best run in every network cell.
inline void write_loss_curves(std::ostream& out, const MatrixSummary& s) {
  out << "optimizer,model,trial,epoch,train_mse,validation_mse\n";
  for (const auto& c : s.cells) {
    const RunRecord* b = c.best();
    if (!b) continue;
    const auto& lc = b->loss_curve;
    for (std::size_t e = 0; e < lc.train_mse.size(); ++e) {
      out << c.optimizer << ',' << c.model << ',' << b->trial << ',' << e + 1 << ',' << detail::fmt(lc.train_mse[e])
          << ',' << detail::fmt(lc.validation_mse[e]) << '\n';
    }
  }
}

struct ReportFiles {
  std::filesystem::path mape_table, best_hyperparameters, loss_curve, records;
  std::vector<std::filesystem::path> forecasts;
};

/**
 * mape_table.csv, best_hyperparameters.csv, loss_curve.csv, records.jsonl and one
 * forecast_N.csv per completed record (N = 1-based position in `records`).
 */
inline ReportFiles emit_reports(const std::vector<RunRecord>& records, const std::filesystem::path& dir,
                                bool write_jsonl = true) {
  if (records.empty()) throw Error(Errc::empty_input, "no run records to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  const auto summary = summarize(records);
  ReportFiles files{dir / "mape_table.csv", dir / "best_hyperparameters.csv", dir / "loss_curve.csv",
                    dir / "records.jsonl", {}};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(Errc::io_error, "cannot write " + p.string());
    return out;
  };
  {
    auto out = open(files.mape_table);
    write_mape_table(out, summary);
  }
  {
    auto out = open(files.best_hyperparameters);
    write_best_hyperparameters(out, summary);
  }
  {
    auto out = open(files.loss_curve);
    write_loss_curves(out, summary);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].ok) continue;
    files.forecasts.push_back(dir / ("forecast_" + std::to_string(i + 1) + ".csv"));
    auto out = open(files.forecasts.back());
    write_forecast(out, records[i]);
  }
  if (write_jsonl) write_records(files.records, records);
  return files;
}

}  // namespace mhf::harness
