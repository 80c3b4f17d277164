#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhforecast/data/calendar.hpp"
#include "mhforecast/data/clean.hpp"
#include "mhforecast/data/csv.hpp"
#include "mhforecast/data/split.hpp"
#include "mhforecast/data/synthetic.hpp"
#include "mhforecast/error.hpp"
#include "mhforecast/metaheuristics/optimizers.hpp"
#include "mhforecast/nn/network.hpp"
#include "mhforecast/random.hpp"

namespace mhf::harness {

using json = nlohmann::ordered_json;

enum class ModelKind { ann, lstm, gru, arima };

constexpr std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::ann: return "ANN";
    case ModelKind::lstm: return "LSTM";
    case ModelKind::gru: return "GRU";
    case ModelKind::arima: return "ARIMA";
  }
  return "?";
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::optional<ModelKind> parse_model(std::string_view s) {
  const auto l = lowercase(s);
  if (l == "ann") return ModelKind::ann;
  if (l == "lstm") return ModelKind::lstm;
  if (l == "gru") return ModelKind::gru;
  if (l == "arima") return ModelKind::arima;
  return std::nullopt;
}

inline nn::NetworkKind network_kind(ModelKind m) {
  switch (m) {
    case ModelKind::ann: return nn::NetworkKind::ann;
    case ModelKind::lstm: return nn::NetworkKind::lstm;
    case ModelKind::gru: return nn::NetworkKind::gru;
    default: throw Error(Errc::invalid_config, "ARIMA is not a neural model");
  }
}

/// Row label of the fixed-hyperparameter baseline in reports.
inline constexpr std::string_view kManual = "Manual";

struct Bounds {
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const Bounds&) const = default;
};

struct SearchBounds {
  Bounds learning_rate{1e-4, 0.3};
  Bounds batch_size{8, 128};
  Bounds epochs{1, 10};
  Bounds p{0, 5};
  Bounds d{0, 3};
  Bounds q{0, 5};

  opt::SearchSpace neural() const {
    return opt::SearchSpace({{"learning_rate", opt::ParamKind::continuous_log, learning_rate.lower, learning_rate.upper},
                             {"batch_size", opt::ParamKind::integer, batch_size.lower, batch_size.upper},
                             {"epochs", opt::ParamKind::integer, epochs.lower, epochs.upper}});
  }
  opt::SearchSpace arima() const {
    return opt::SearchSpace({{"p", opt::ParamKind::integer, p.lower, p.upper},
                             {"d", opt::ParamKind::integer, d.lower, d.upper},
                             {"q", opt::ParamKind::integer, q.lower, q.upper}});
  }
  opt::SearchSpace for_model(ModelKind m) const { return m == ModelKind::arima ? arima() : neural(); }
  bool operator==(const SearchBounds&) const = default;
};

/// Fixed configuration used by the manual-selection baseline.
struct ManualBaseline {
  double learning_rate = 0.001;
  int batch_size = 32;
  int epochs = 50;
  int p = 1;
  int d = 1;
  int q = 1;

  opt::Assignment for_model(ModelKind m) const {
    if (m == ModelKind::arima) return {{{"p", p}, {"d", d}, {"q", q}}};
    return {{{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"epochs", epochs}}};
  }
  bool operator==(const ManualBaseline&) const = default;
};

struct DataConfig {
  /// CSV to ingest; ignored when `synthetic` is set.
  std::string path;
  bool synthetic = false;
  int synthetic_days = 60;
  std::uint64_t synthetic_seed = 1;
  data::CsvSchema schema;
  std::string target = "temperature";
  double drop_threshold = 0.5;
  data::FillPolicy fill = data::FillPolicy::linear_interpolate;
};

/// Explicit date ranges, or whole-day fractions of the cleaned table when absent.
struct SplitConfig {
  std::optional<data::SplitSpec> dates;
  double train_fraction = 0.7;
  double validation_fraction = 0.15;
};

struct ExperimentConfig {
  DataConfig data;
  SplitConfig split;
  std::size_t lookback = 3;
  std::size_t horizon = 24;
  std::vector<ModelKind> models{ModelKind::ann, ModelKind::lstm, ModelKind::gru, ModelKind::arima};
  std::vector<opt::Algorithm> optimizers{opt::Algorithm::ga, opt::Algorithm::de, opt::Algorithm::pso};
  bool manual_baseline = true;
  SearchBounds search;
  ManualBaseline manual;
  /// population_size, generations and algorithm constants; the seed field is ignored.
  opt::OptimizerConfig optimizer;
  std::size_t trials = 5;
  std::uint64_t seed = 42;
  std::string output = "results";
  /// Matrix cells run concurrently; MHF_WORKERS overrides.
  std::size_t workers = 1;
  /// Test windows (one per day) dumped to each forecast_N.csv.
  std::size_t forecast_samples = 3;

  void validate() const;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

inline std::string date_text(std::chrono::year_month_day d) { return data::format_date(d); }

inline std::chrono::year_month_day date_value(const json& j) {
  const auto text = j.get<std::string>();
  const auto d = data::parse_date(text);
  if (!d) throw Error(Errc::invalid_config, "bad date '" + text + "' (expected YYYY-MM-DD)");
  return *d;
}

inline json range_json(const data::DateRange& r) { return json::array({date_text(r.first), date_text(r.last)}); }

inline data::DateRange range_value(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::invalid_config, "date range must be [first, last]");
  return {date_value(j[0]), date_value(j[1])};
}

inline json bounds_json(const Bounds& b) { return json::array({b.lower, b.upper}); }

inline Bounds bounds_value(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::invalid_config, "bounds must be [lower, upper]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
  json data{{"path", c.data.path},
            {"synthetic", c.data.synthetic},
            {"synthetic_days", c.data.synthetic_days},
            {"synthetic_seed", c.data.synthetic_seed},
            {"date_column", c.data.schema.date_column},
            {"time_column", c.data.schema.time_column},
            {"features", c.data.schema.features},
            {"tolerate_gaps", c.data.schema.tolerate_gaps},
            {"target", c.data.target},
            {"drop_threshold", c.data.drop_threshold},
            {"fill", c.data.fill == data::FillPolicy::forward_fill ? "forward" : "linear"}};
  json split;
  if (c.split.dates) {
    split = {{"train", detail::range_json(c.split.dates->train)},
             {"validation", detail::range_json(c.split.dates->validation)},
             {"test", detail::range_json(c.split.dates->test)}};
  } else {
    split = {{"train_fraction", c.split.train_fraction}, {"validation_fraction", c.split.validation_fraction}};
  }
  json models = json::array(), optimizers = json::array();
  for (auto m : c.models) models.push_back(std::string(to_string(m)));
  for (auto a : c.optimizers) optimizers.push_back(std::string(opt::to_string(a)));
  const auto& o = c.optimizer;
  return {
      {"data", data},
      {"split", split},
      {"window", {{"lookback", c.lookback}, {"horizon", c.horizon}}},
      {"models", models},
      {"optimizers", optimizers},
      {"manual_baseline", c.manual_baseline},
      {"search",
       {{"learning_rate", detail::bounds_json(c.search.learning_rate)},
        {"batch_size", detail::bounds_json(c.search.batch_size)},
        {"epochs", detail::bounds_json(c.search.epochs)},
        {"p", detail::bounds_json(c.search.p)},
        {"d", detail::bounds_json(c.search.d)},
        {"q", detail::bounds_json(c.search.q)}}},
      {"manual",
       {{"learning_rate", c.manual.learning_rate},
        {"batch_size", c.manual.batch_size},
        {"epochs", c.manual.epochs},
        {"p", c.manual.p},
        {"d", c.manual.d},
        {"q", c.manual.q}}},
      {"optimizer",
       {{"population", o.population_size},
        {"generations", o.generations},
        {"fitness_workers", o.workers},
        {"ga",
         {{"crossover_prob", o.ga.crossover_prob},
          {"mutation_prob", o.ga.mutation_prob},
          {"mutation_sigma", o.ga.mutation_sigma}}},
        {"de", {{"F", o.de.scale_factor}, {"CR", o.de.crossover_rate}, {"force_jrand", o.de.force_jrand}}},
        {"pso", {{"inertia", o.pso.inertia}, {"cognitive", o.pso.cognitive}, {"social", o.pso.social}}}}},
      {"trials", c.trials},
      {"seed", c.seed},
      {"output", c.output},
      {"workers", c.workers},
      {"forecast_samples", c.forecast_samples},
  };
}

/// Missing keys keep their defaults, so a config file only needs what it changes.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      detail::read_if(d, "path", c.data.path);
      detail::read_if(d, "synthetic", c.data.synthetic);
      detail::read_if(d, "synthetic_days", c.data.synthetic_days);
      detail::read_if(d, "synthetic_seed", c.data.synthetic_seed);
      detail::read_if(d, "date_column", c.data.schema.date_column);
      detail::read_if(d, "time_column", c.data.schema.time_column);
      detail::read_if(d, "features", c.data.schema.features);
      detail::read_if(d, "tolerate_gaps", c.data.schema.tolerate_gaps);
      detail::read_if(d, "target", c.data.target);
      detail::read_if(d, "drop_threshold", c.data.drop_threshold);
      if (d.contains("fill")) {
        const auto fill = lowercase(d.at("fill").get<std::string>());
        if (fill == "linear") c.data.fill = data::FillPolicy::linear_interpolate;
        else if (fill == "forward") c.data.fill = data::FillPolicy::forward_fill;
        else throw Error(Errc::invalid_config, "fill must be 'linear' or 'forward'");
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("train")) {
        c.split.dates = data::SplitSpec{detail::range_value(s.at("train")), detail::range_value(s.at("validation")),
                                        detail::range_value(s.at("test"))};
      }
      detail::read_if(s, "train_fraction", c.split.train_fraction);
      detail::read_if(s, "validation_fraction", c.split.validation_fraction);
    }
    if (j.contains("window")) {
      detail::read_if(j.at("window"), "lookback", c.lookback);
      detail::read_if(j.at("window"), "horizon", c.horizon);
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) {
        const auto kind = parse_model(m.get<std::string>());
        if (!kind) throw Error(Errc::invalid_config, "unknown model '" + m.get<std::string>() + "'");
        c.models.push_back(*kind);
      }
    }
    if (j.contains("optimizers")) {
      c.optimizers.clear();
      for (const auto& a : j.at("optimizers")) {
        const auto alg = opt::parse_algorithm(a.get<std::string>());
        if (!alg) throw Error(Errc::invalid_config, "unknown optimizer '" + a.get<std::string>() + "'");
        c.optimizers.push_back(*alg);
      }
    }
    detail::read_if(j, "manual_baseline", c.manual_baseline);
    if (j.contains("search")) {
      const auto& s = j.at("search");
      for (auto [key, field] : {std::pair{"learning_rate", &c.search.learning_rate},
                                {"batch_size", &c.search.batch_size},
                                {"epochs", &c.search.epochs},
                                {"p", &c.search.p},
                                {"d", &c.search.d},
                                {"q", &c.search.q}}) {
        if (s.contains(key)) *field = detail::bounds_value(s.at(key));
      }
    }
    if (j.contains("manual")) {
      const auto& m = j.at("manual");
      detail::read_if(m, "learning_rate", c.manual.learning_rate);
      detail::read_if(m, "batch_size", c.manual.batch_size);
      detail::read_if(m, "epochs", c.manual.epochs);
      detail::read_if(m, "p", c.manual.p);
      detail::read_if(m, "d", c.manual.d);
      detail::read_if(m, "q", c.manual.q);
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      detail::read_if(o, "population", c.optimizer.population_size);
      detail::read_if(o, "generations", c.optimizer.generations);
      detail::read_if(o, "fitness_workers", c.optimizer.workers);
      if (o.contains("ga")) {
        detail::read_if(o.at("ga"), "crossover_prob", c.optimizer.ga.crossover_prob);
        detail::read_if(o.at("ga"), "mutation_prob", c.optimizer.ga.mutation_prob);
        detail::read_if(o.at("ga"), "mutation_sigma", c.optimizer.ga.mutation_sigma);
      }
      if (o.contains("de")) {
        detail::read_if(o.at("de"), "F", c.optimizer.de.scale_factor);
        detail::read_if(o.at("de"), "CR", c.optimizer.de.crossover_rate);
        detail::read_if(o.at("de"), "force_jrand", c.optimizer.de.force_jrand);
      }
      if (o.contains("pso")) {
        detail::read_if(o.at("pso"), "inertia", c.optimizer.pso.inertia);
        detail::read_if(o.at("pso"), "cognitive", c.optimizer.pso.cognitive);
        detail::read_if(o.at("pso"), "social", c.optimizer.pso.social);
      }
    }
    detail::read_if(j, "trials", c.trials);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "output", c.output);
    detail::read_if(j, "workers", c.workers);
    detail::read_if(j, "forecast_samples", c.forecast_samples);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, std::string("config: ") + e.what());
  }
  return c;
}

inline void ExperimentConfig::validate() const {
  if (trials < 1) throw Error(Errc::invalid_config, "trials must be >= 1");
  if (models.empty()) throw Error(Errc::invalid_config, "no models configured");
  if (optimizers.empty() && !manual_baseline) throw Error(Errc::invalid_config, "no optimizers configured");
  if (optimizer.population_size < 5 || optimizer.population_size > 10) {
    throw Error(Errc::invalid_config, "population must lie in [5, 10]");
  }
  if (optimizer.generations < 1) throw Error(Errc::invalid_config, "generations must be >= 1");
  if (lookback < 1 || horizon < 1) throw Error(Errc::invalid_config, "lookback and horizon must be >= 1");
  for (auto a : optimizers) optimizer.validate(a);
  // Constructing the spaces validates every ParamSpec.
  (void)search.neural();
  (void)search.arima();
  if (search.learning_rate.lower <= 0.0) throw Error(Errc::invalid_config, "learning rate bounds must be positive");
  if (search.batch_size.lower < 1 || search.epochs.lower < 1) {
    throw Error(Errc::invalid_config, "batch_size and epochs bounds must be >= 1");
  }
  if (search.p.lower < 0 || search.d.lower < 0 || search.q.lower < 0) {
    throw Error(Errc::invalid_config, "ARIMA order bounds must be >= 0");
  }
  if (!(manual.learning_rate >= 0.0) || manual.batch_size < 1 || manual.epochs < 1 || manual.p < 0 || manual.d < 0 ||
      manual.q < 0) {
    throw Error(Errc::invalid_config, "manual baseline values out of range");
  }
  if (!split.dates) {
    const double tf = split.train_fraction, vf = split.validation_fraction;
    if (!(tf > 0.0 && vf > 0.0 && tf + vf < 1.0)) {
      throw Error(Errc::invalid_config, "split fractions must be positive and sum to less than 1");
    }
  } else {
    split.dates->validate();
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, path.string() + ": " + e.what());
  }
  auto c = config_from_json(j);
  // Relative data paths are resolved against the config file's directory.
  if (!c.data.path.empty() && std::filesystem::path(c.data.path).is_relative()) {
    c.data.path = (path.parent_path() / c.data.path).lexically_normal().string();
  }
  return c;
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

/**
 * Hash of everything that can change a result. Output directory and worker counts
 * are excluded so reruns elsewhere or with more threads hash the same.
 */
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  j.erase("workers");
  j["optimizer"].erase("fitness_workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace mhf::harness
