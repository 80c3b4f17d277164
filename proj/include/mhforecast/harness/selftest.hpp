#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mhforecast/arima/differencing.hpp"
#include "mhforecast/data/clean.hpp"
#include "mhforecast/data/scaler.hpp"
#include "mhforecast/data/synthetic.hpp"
#include "mhforecast/data/windows.hpp"
#include "mhforecast/evaluation/metrics.hpp"
#include "mhforecast/metaheuristics/optimizers.hpp"
#include "mhforecast/nn/gradcheck.hpp"

namespace mhf::harness {

struct SelfCheck {
  std::string name;
  std::function<bool()> run;
};

/// Quick invariant checks on synthetic data, one line each.
inline std::vector<SelfCheck> self_checks(std::uint64_t seed) {
  std::vector<SelfCheck> checks;

  checks.push_back({"window count = T - L - H + 1", [] {
                      for (std::size_t t = 27; t <= 77; ++t) {
                        data::TimeSeriesTable table;
                        table.columns = {"temperature"};
                        for (std::size_t r = 0; r < t; ++r) table.append_row(static_cast<data::HourStamp>(r), std::vector{double(r)});
                        if (data::make_windows(table, "temperature").num_samples != t - 27 + 1) return false;
                      }
                      return true;
                    }});

  checks.push_back({"scaler round trip and standardized moments", [seed] {
                      const auto t = data::clean_missing(data::generate_synthetic_weather({.days = 10, .seed = seed}), 0.5);
                      const auto s = data::fit_scaler(t);
                      const auto z = data::scaler_apply(s, t, data::ScaleDirection::forward);
                      const auto back = data::scaler_apply(s, z, data::ScaleDirection::inverse);
                      for (std::size_t i = 0; i < t.values.size(); ++i)
                        if (std::abs(back.values[i] - t.values[i]) > 1e-9 * std::max(1.0, std::abs(t.values[i]))) return false;
                      for (std::size_t c = 0; c < z.cols(); ++c) {
                        double m = 0.0, v = 0.0;
                        for (std::size_t r = 0; r < z.rows(); ++r) m += z.at(r, c);
                        m /= static_cast<double>(z.rows());
                        for (std::size_t r = 0; r < z.rows(); ++r) v += (z.at(r, c) - m) * (z.at(r, c) - m);
                        v = std::sqrt(v / static_cast<double>(z.rows()));
                        if (std::abs(m) > 1e-9 || std::abs(v - 1.0) > 1e-9) return false;
                      }
                      return true;
                    }});

  for (auto kind : {nn::NetworkKind::ann, nn::NetworkKind::lstm, nn::NetworkKind::gru}) {
    checks.push_back({"gradient check " + std::string(nn::to_string(kind)) + " (reduced widths)", [kind, seed] {
                        nn::NetworkSpec s;
                        s.kind = kind;
                        s.features = 3;
                        s.horizon = 4;
                        s.ann_hidden = {6, 5};
                        s.projection = 5;
                        s.recurrent = 6;
                        const auto net = nn::randomized_network(s, seed);
                        const auto [x, y] = nn::random_batch(s, 2, seed + 1);
                        return nn::check_gradients(net, x, y).max_relative_error < 1e-5;
                      }});
  }

  checks.push_back({"DE with F=0, CR=0 leaves the population unchanged", [seed] {
                      const opt::SearchSpace space({{"a", opt::ParamKind::continuous, -5, 5},
                                                    {"b", opt::ParamKind::continuous, -5, 5}});
                      opt::OptimizerConfig c;
                      c.population_size = 6;
                      c.generations = 4;
                      c.seed = seed;
                      c.de = {0.0, 0.0, false};
                      const auto f = [](const opt::Assignment& a) { return a.at("a") * a.at("a") + a.at("b"); };
                      const auto r = opt::de_optimize(space, f, c);
                      c.generations = 1;
                      const auto first = opt::de_optimize(space, f, c);
                      for (std::size_t i = 0; i < r.final_population.size(); ++i)
                        if (r.final_population[i].position != first.final_population[i].position) return false;
                      return true;
                    }});

  checks.push_back({"differencing round trip d = 1..3", [seed] {
                      std::mt19937_64 rng(seed);
                      std::normal_distribution<double> g(0.0, 10.0);
                      std::vector<double> x(100);
                      for (auto& v : x) v = g(rng);
                      for (std::size_t d = 1; d <= 3; ++d) {
                        const auto back = arima::inverse_difference(arima::difference(x, d));
                        for (std::size_t i = 0; i < x.size(); ++i)
                          if (std::abs(back[i] - x[i]) > 1e-9) return false;
                      }
                      return true;
                    }});

  checks.push_back({"MAPE exclusion floor", [] {
                      const auto m = eval::mape(std::vector<double>{0.01, 10}, std::vector<double>{5, 11}, 0.1);
                      return std::abs(m.percent - 10.0) < 1e-12 && m.excluded == 1;
                    }});
  return checks;
}

/// Returns true when every check passes.
inline bool run_selftest(std::ostream& out, std::uint64_t seed) {
  bool all = true;
  for (const auto& c : self_checks(seed)) {
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      out << "  (" << e.what() << ")\n";
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace mhf::harness
