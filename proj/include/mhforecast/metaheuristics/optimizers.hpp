#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mhforecast/error.hpp"
#include "mhforecast/metaheuristics/operators.hpp"
#include "mhforecast/metaheuristics/search_space.hpp"
#include "mhforecast/random.hpp"

namespace mhf::opt {

/// Lower is better. Throwing or returning NaN marks the candidate as failed (+inf).
using FitnessFn = std::function<double(const Assignment&)>;

enum class Algorithm { ga, de, pso };

constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ga: return "GA";
    case Algorithm::de: return "DE";
    case Algorithm::pso: return "PSO";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ga") return Algorithm::ga;
  if (lower == "de") return Algorithm::de;
  if (lower == "pso") return Algorithm::pso;
  return std::nullopt;
}

struct GaSettings {
  double crossover_prob = 0.9;
  double mutation_prob = 0.3;
  double mutation_sigma = 0.1;
};

struct DeSettings {
  double scale_factor = 0.5;    // F
  double crossover_rate = 0.9;  // CR
  bool force_jrand = false;
};

struct OptimizerConfig {
  std::size_t population_size = 10;
  std::size_t generations = 10;
  std::uint64_t seed = 0;
  /// Threads used for fitness evaluation within one generation.
  std::size_t workers = 1;
  GaSettings ga;
  DeSettings de;
  PsoCoefficients pso;

  void validate(Algorithm algorithm) const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_config, std::string(name) + " must lie in [0, 1]");
    };
    if (population_size < 1) throw Error(Errc::invalid_config, "population_size must be >= 1");
    if (algorithm == Algorithm::de && population_size < 4) {
      throw Error(Errc::invalid_config, "DE needs population_size >= 4 (target plus three donors)");
    }
    prob(ga.crossover_prob, "crossover_prob");
    prob(ga.mutation_prob, "mutation_prob");
    prob(de.crossover_rate, "CR");
    if (!(ga.mutation_sigma >= 0.0) || !(de.scale_factor >= 0.0) || !std::isfinite(de.scale_factor)) {
      throw Error(Errc::invalid_config, "mutation_sigma and F must be finite and non-negative");
    }
    for (double c : {pso.inertia, pso.cognitive, pso.social}) {
      if (!std::isfinite(c)) throw Error(Errc::invalid_config, "PSO coefficients must be finite");
    }
  }
};

struct Evaluation {
  std::size_t generation = 0;  // 0 = initial population
  Assignment assignment;
  double fitness = 0.0;
};

struct OptimizationResult {
  Assignment best;
  Position best_position;
  double best_fitness = std::numeric_limits<double>::infinity();
  /// Best-so-far after initialization and after each generation.
  std::vector<double> trace;
  std::size_t evaluations = 0;
  std::vector<Evaluation> history;
  /// Population at termination (GA/DE: individuals, PSO: current positions).
  std::vector<Candidate> final_population;
};

namespace detail {

inline double safe_evaluate(const FitnessFn& fitness, const Assignment& a) {
  try {
    const double f = fitness(a);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Evaluates in parallel; results are stored by index so output is independent of scheduling.
class Evaluator {
 public:
  Evaluator(const SearchSpace& space, const FitnessFn& fitness, std::size_t workers, OptimizationResult& result)
      : space_(space), fitness_(fitness), workers_(std::max<std::size_t>(1, workers)), result_(result) {}

  std::vector<double> operator()(const std::vector<Position>& positions, std::size_t generation) {
    const std::size_t n = positions.size();
    std::vector<Assignment> decoded(n);
    for (std::size_t i = 0; i < n; ++i) decoded[i] = decode_candidate(space_, positions[i]);
    std::vector<double> out(n);
    const std::size_t threads = std::min(workers_, n);
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) out[i] = safe_evaluate(fitness_, decoded[i]);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) out[i] = safe_evaluate(fitness_, decoded[i]);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < n; ++i) {
      result_.history.push_back({generation, decoded[i], out[i]});
      if (out[i] < result_.best_fitness || result_.best_position.empty()) {
        result_.best_fitness = out[i];
        result_.best_position = positions[i];
        result_.best = decoded[i];
      }
    }
    result_.evaluations += n;
    return out;
  }

  void close_generation() { result_.trace.push_back(result_.best_fitness); }

 private:
  const SearchSpace& space_;
  const FitnessFn& fitness_;
  std::size_t workers_;
  OptimizationResult& result_;
};

inline std::vector<Position> random_positions(const SearchSpace& space, std::size_t n, Rng& rng) {
  std::vector<Position> out(n, Position(space.dimension()));
  for (auto& x : out) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = std::uniform_real_distribution<double>(space.lower(j), space.upper(j))(rng);
    }
  }
  return out;
}

inline std::vector<Candidate> zip(const std::vector<Position>& xs, const std::vector<double>& fs) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], fs[i]});
  return out;
}

}  // namespace detail

/**
 * Genetic algorithm: roulette-wheel parents, uniform crossover, Gaussian mutation.
 * Each generation keeps the current best individual and replaces the other N-1.
 */
inline OptimizationResult ga_optimize(const SearchSpace& space, const FitnessFn& fitness,
                                      const OptimizerConfig& config) {
  config.validate(Algorithm::ga);
  OptimizationResult result;
  detail::Evaluator evaluate(space, fitness, config.workers, result);
  Rng rng(config.seed);
  const std::size_t n = config.population_size;

  std::vector<Position> population = detail::random_positions(space, n, rng);
  std::vector<double> scores = evaluate(population, 0);
  evaluate.close_generation();

  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    const auto elite = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
    std::vector<Position> children;
    children.reserve(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const auto [a, b] = roulette_select(scores, rng);
      Position child = uniform_crossover(population[a], population[b], config.ga.crossover_prob, rng);
      children.push_back(ga_mutate(child, config.ga.mutation_prob, config.ga.mutation_sigma, space, rng));
    }
    const std::vector<double> child_scores = evaluate(children, gen);

    std::vector<Position> next{population[elite]};
    std::vector<double> next_scores{scores[elite]};
    next.insert(next.end(), children.begin(), children.end());
    next_scores.insert(next_scores.end(), child_scores.begin(), child_scores.end());
    population = std::move(next);
    scores = std::move(next_scores);
    evaluate.close_generation();
  }
  result.final_population = detail::zip(population, scores);
  return result;
}

/**
 * DE/rand/1/bin with greedy one-to-one replacement. All trial vectors of a generation
 * are built from the population as it stood at the start of that generation.
 */
inline OptimizationResult de_optimize(const SearchSpace& space, const FitnessFn& fitness,
                                      const OptimizerConfig& config) {
  config.validate(Algorithm::de);
  OptimizationResult result;
  detail::Evaluator evaluate(space, fitness, config.workers, result);
  Rng rng(config.seed);
  const std::size_t n = config.population_size;

  std::vector<Position> population = detail::random_positions(space, n, rng);
  std::vector<double> scores = evaluate(population, 0);
  evaluate.close_generation();

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    std::vector<Position> trials;
    trials.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const Position v = de_mutate(population[r1], population[r2], population[r3], config.de.scale_factor, space);
      trials.push_back(de_crossover(population[i], v, config.de.crossover_rate, config.de.force_jrand, rng));
    }
    const std::vector<double> trial_scores = evaluate(trials, gen);
    for (std::size_t i = 0; i < n; ++i) {
      if (trial_scores[i] < scores[i]) {
        population[i] = std::move(trials[i]);
        scores[i] = trial_scores[i];
      }
    }
    evaluate.close_generation();
  }
  result.final_population = detail::zip(population, scores);
  return result;
}

/// Global-best PSO. Initial velocities are uniform in +-(upper - lower) per coordinate.
inline OptimizationResult pso_optimize(const SearchSpace& space, const FitnessFn& fitness,
                                       const OptimizerConfig& config) {
  config.validate(Algorithm::pso);
  OptimizationResult result;
  detail::Evaluator evaluate(space, fitness, config.workers, result);
  Rng rng(config.seed);
  const std::size_t n = config.population_size;

  std::vector<Particle> swarm(n);
  {
    const auto positions = detail::random_positions(space, n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      swarm[i].position = positions[i];
      swarm[i].velocity.resize(space.dimension());
      for (std::size_t j = 0; j < space.dimension(); ++j) {
        const double w = std::abs(space.upper(j) - space.lower(j));
        swarm[i].velocity[j] = std::uniform_real_distribution<double>(-w, w)(rng);
      }
    }
  }
  auto positions_of = [&] {
    std::vector<Position> xs;
    for (const auto& p : swarm) xs.push_back(p.position);
    return xs;
  };

  std::vector<Position> personal_best = positions_of();
  std::vector<double> personal_score = evaluate(personal_best, 0);
  auto global = static_cast<std::size_t>(std::min_element(personal_score.begin(), personal_score.end()) -
                                         personal_score.begin());
  Position global_best = personal_best[global];
  evaluate.close_generation();

  std::vector<double> scores = personal_score;
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    for (std::size_t i = 0; i < n; ++i) {
      pso_update(swarm[i], personal_best[i], global_best, config.pso, space, rng);
    }
    scores = evaluate(positions_of(), gen);
    for (std::size_t i = 0; i < n; ++i) {
      if (scores[i] < personal_score[i]) {
        personal_score[i] = scores[i];
        personal_best[i] = swarm[i].position;
      }
    }
    global = static_cast<std::size_t>(std::min_element(personal_score.begin(), personal_score.end()) -
                                      personal_score.begin());
    global_best = personal_best[global];
    evaluate.close_generation();
  }
  result.final_population = detail::zip(positions_of(), scores);
  return result;
}

inline OptimizationResult optimize(Algorithm algorithm, const SearchSpace& space, const FitnessFn& fitness,
                                   const OptimizerConfig& config) {
  switch (algorithm) {
    case Algorithm::ga: return ga_optimize(space, fitness, config);
    case Algorithm::de: return de_optimize(space, fitness, config);
    case Algorithm::pso: return pso_optimize(space, fitness, config);
  }
  throw Error(Errc::invalid_config, "unknown algorithm");
}

}  // namespace mhf::opt
