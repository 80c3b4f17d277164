#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mhforecast/metaheuristics/optimizers.hpp"

using namespace mhf;
using namespace mhf::opt;

namespace {

SearchSpace box(std::size_t dim, double lo, double hi) {
  std::vector<ParamSpec> specs;
  for (std::size_t j = 0; j < dim; ++j) specs.push_back({"x" + std::to_string(j), ParamKind::continuous, lo, hi});
  return SearchSpace(specs);
}

double sphere(const Assignment& a) {
  double s = 0.0;
  for (const auto& [k, v] : a.values) s += v * v;
  return s;
}

// Pearson statistic against expected probabilities.
double chi_square(const std::vector<int>& counts, const std::vector<double>& probs) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double x2 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * probs[i];
    x2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  return x2;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(SearchSpace, Validation) {
  EXPECT_THROW(SearchSpace({{"a", ParamKind::continuous, 1.0, 1.0}}), Error);
  EXPECT_THROW(SearchSpace({{"a", ParamKind::continuous_log, 0.0, 1.0}}), Error);
  EXPECT_THROW(SearchSpace({{"a", ParamKind::continuous, 0, 1}, {"a", ParamKind::integer, 0, 3}}), Error);
}

TEST(DecodeCandidate, Examples) {
  SearchSpace space({{"p", ParamKind::integer, 0, 5},
                     {"lr", ParamKind::continuous_log, 1e-4, 1.0},
                     {"d", ParamKind::integer, 0, 3},
                     {"c", ParamKind::continuous, -1, 1}});
  auto a = decode_candidate(space, Position{2.4, std::log(1e-2), 3.7, 0.25});
  EXPECT_EQ(a.at("p"), 2.0);
  EXPECT_NEAR(a.at("lr"), 1e-2, 1e-15);
  EXPECT_EQ(a.at("d"), 3.0);
  EXPECT_EQ(a.at("c"), 0.25);
  EXPECT_EQ(decode_candidate(space, Position{2.5, 0, 0, 0}).at("p"), 3.0);  // half away from zero
  try {
    decode_candidate(space, Position{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(Roulette, WeightsMatchHandComputedFormula) {
  // fitnesses [0, 1]: worst 1, eps = 1e-12 * 2.
  const std::vector<double> f{0.0, 1.0};
  const auto w = roulette_weights(f);
  const double eps = 2e-12;
  EXPECT_DOUBLE_EQ(w[0], 1.0 + eps);
  EXPECT_DOUBLE_EQ(w[1], eps);
  EXPECT_NEAR(w[0] / (w[0] + w[1]), (1 + eps) / (1 + 2 * eps), 1e-15);

  Rng rng(1);
  int zero_first = 0;
  for (int i = 0; i < 1000; ++i) zero_first += roulette_select(f, rng).first == 0 ? 1 : 0;
  EXPECT_EQ(zero_first, 1000);
}

TEST(Roulette, EqualFitnessIsUniform) {
  const std::vector<double> f(5, 3.0);
  Rng rng(7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 10000; ++i) ++counts[roulette_select(f, rng).first];
  EXPECT_LT(chi_square(counts, std::vector<double>(5, 0.2)), 13.2767);  // chi2(0.99, df=4)
}

TEST(Roulette, FrequenciesFollowWeights) {
  const std::vector<double> f{1.0, 2.0, 4.0, 5.0};
  // worst = 5, eps = 6e-12; weights 4, 3, 1, ~0
  const std::vector<double> expected{4.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0};
  Rng rng(3);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 10000; ++i) ++counts[roulette_select(f, rng).first];
  EXPECT_EQ(counts[3], 0);
  EXPECT_LT(chi_square({counts[0], counts[1], counts[2]}, expected), 9.2103);  // df=2
}

TEST(Roulette, DegenerateAndEmpty) {
  Rng rng(1);
  const std::vector<double> one{4.2};
  EXPECT_EQ(roulette_select(one, rng), (std::pair<std::size_t, std::size_t>{0, 0}));
  const std::vector<double> none;
  try {
    roulette_select(none, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_population);
  }
  const std::vector<double> with_inf{1.0, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(roulette_select(with_inf, rng).first, 0u);
}

TEST(UniformCrossover, Cases) {
  Rng rng(5);
  const Position p1{1, 2, 3}, p2{4, 5, 6};
  EXPECT_EQ(uniform_crossover(p1, p1, 1.0, rng), p1);
  EXPECT_EQ(uniform_crossover(p1, p2, 0.0, rng), p1);
  const Position zeros(1000, 0.0), ones(1000, 1.0);
  for (int k = 0; k < 100; ++k) {
    const auto child = uniform_crossover(zeros, ones, 1.0, rng);
    const double mean = std::accumulate(child.begin(), child.end(), 0.0) / 1000.0;
    EXPECT_GE(mean, 0.45);
    EXPECT_LE(mean, 0.55);
  }
  EXPECT_THROW(uniform_crossover(p1, Position{1.0}, 1.0, rng), Error);
}

TEST(GaMutate, Cases) {
  Rng rng(9);
  const auto space = box(2, 0.0, 1.0);
  const Position x{0.3, 1.0};
  EXPECT_EQ(ga_mutate(x, 0.0, 0.5, space, rng), x);
  for (int i = 0; i < 200; ++i) {
    const auto y = ga_mutate(x, 1.0, 0.5, space, rng);
    EXPECT_TRUE(space.contains(y));
  }
  // Monte-Carlo oracle: sample std of a single mutated coordinate.
  const auto line = box(1, 0.0, 1.0);
  double s = 0.0, ss = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double v = ga_mutate(Position{0.5}, 1.0, 0.1, line, rng)[0];
    s += v;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 0.1, 0.005);
}

TEST(DeMutate, Formula) {
  const auto space = box(2, -10, 10);
  EXPECT_EQ(de_mutate(Position{1, 2}, Position{3, 4}, Position{1, 1}, 0.5, space), (Position{2, 3.5}));
  EXPECT_EQ(de_mutate(Position{1, 2}, Position{3, 4}, Position{1, 1}, 0.0, space), (Position{1, 2}));
  EXPECT_EQ(de_mutate(Position{1, 2}, Position{3, 4}, Position{3, 4}, 1.7, space), (Position{1, 2}));
  EXPECT_EQ(de_mutate(Position{9, 2}, Position{9, 4}, Position{0, 4}, 1.0, space), (Position{10, 2}));
  EXPECT_THROW(de_mutate(Position{1}, Position{1, 2}, Position{1, 2}, 1.0, space), Error);
}

TEST(DeCrossover, ClosedFormCases) {
  Rng rng(2);
  const Position x{0, 0, 0, 0}, v{1, 2, 3, 4};
  EXPECT_EQ(de_crossover(x, v, 1.0, false, rng), v);
  EXPECT_EQ(de_crossover(x, v, 0.0, false, rng), x);
  for (int i = 0; i < 50; ++i) {
    const auto u = de_crossover(x, v, 0.0, true, rng);
    int differs = 0;
    for (std::size_t j = 0; j < u.size(); ++j) differs += u[j] != x[j] ? 1 : 0;
    EXPECT_EQ(differs, 1);
  }
}

TEST(PsoUpdate, Cases) {
  Rng rng(4);
  const auto space = box(1, -5, 5);
  Particle p{{0.0}, {1.0}};
  pso_update(p, Position{0.0}, Position{0.0}, {0.5, 0.0, 0.0}, space, rng);
  EXPECT_EQ(p.velocity[0], 0.5);
  EXPECT_EQ(p.position[0], 0.5);

  Particle frozen{{1.0}, {2.0}};
  pso_update(frozen, Position{3.0}, Position{-2.0}, {0.0, 0.0, 0.0}, space, rng);
  EXPECT_EQ(frozen.velocity[0], 0.0);
  EXPECT_EQ(frozen.position[0], 1.0);
  pso_update(frozen, Position{3.0}, Position{-2.0}, {0.0, 0.0, 0.0}, space, rng);
  EXPECT_EQ(frozen.position[0], 1.0);

  Particle still{{2.0}, {0.8}};
  pso_update(still, Position{2.0}, Position{2.0}, {0.25, 1.5, 1.5}, space, rng);
  EXPECT_EQ(still.velocity[0], 0.2);

  Particle edge{{4.5}, {3.0}};
  pso_update(edge, Position{4.5}, Position{4.5}, {1.0, 0.0, 0.0}, space, rng);
  EXPECT_EQ(edge.position[0], 5.0);
  EXPECT_EQ(edge.velocity[0], 0.0);
}

TEST(Operators, RandomSequencesStayInBounds) {
  SearchSpace space({{"a", ParamKind::continuous, -1, 1},
                     {"b", ParamKind::continuous_log, 1e-4, 1.0},
                     {"c", ParamKind::integer, 0, 5}});
  Rng rng(123);
  std::uniform_real_distribution<double> u(0, 1);
  auto random_point = [&] {
    Position x(3);
    for (std::size_t j = 0; j < 3; ++j) x[j] = space.lower(j) + u(rng) * space.width(j);
    return x;
  };
  Position x = random_point();
  Particle particle{x, {0.3, -2.0, 4.0}};
  for (int step = 0; step < 2000; ++step) {
    switch (step % 4) {
      case 0: x = ga_mutate(x, 0.7, u(rng), space, rng); break;
      case 1: x = de_mutate(x, random_point(), random_point(), 3.0 * u(rng), space); break;
      case 2: x = de_crossover(x, random_point(), u(rng), step % 3 == 0, rng); break;
      default:
        pso_update(particle, random_point(), random_point(), {1.2, 2.0, 2.0}, space, rng);
        ASSERT_TRUE(space.contains(particle.position));
    }
    ASSERT_TRUE(space.contains(x)) << "step " << step;
  }
}

class OptimizerTest : public ::testing::TestWithParam<Algorithm> {};

TEST_P(OptimizerTest, ConstantFitness) {
  OptimizerConfig cfg;
  cfg.population_size = 6;
  cfg.generations = 4;
  auto r = optimize(GetParam(), box(2, -1, 1), [](const Assignment&) { return 7.0; }, cfg);
  EXPECT_EQ(r.best_fitness, 7.0);
  EXPECT_EQ(r.trace, std::vector<double>(5, 7.0));
}

TEST_P(OptimizerTest, TraceMonotoneEvaluationBoundAndDeterminism) {
  const auto space = box(3, -5, 5);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    OptimizerConfig cfg;
    cfg.population_size = 7;
    cfg.generations = 12;
    cfg.seed = seed;
    const auto r = optimize(GetParam(), space, sphere, cfg);
    ASSERT_EQ(r.trace.size(), cfg.generations + 1);
    for (std::size_t g = 1; g < r.trace.size(); ++g) EXPECT_LE(r.trace[g], r.trace[g - 1]);
    EXPECT_LE(r.evaluations, cfg.population_size * (cfg.generations + 1));
    EXPECT_EQ(r.evaluations, r.history.size());
    EXPECT_EQ(r.best_fitness, r.trace.back());
    EXPECT_EQ(sphere(r.best), r.best_fitness);
    for (const auto& c : r.final_population) EXPECT_TRUE(space.contains(c.position));

    const auto again = optimize(GetParam(), space, sphere, cfg);
    EXPECT_EQ(again.trace, r.trace);
    EXPECT_EQ(again.best_position, r.best_position);

    cfg.workers = 3;
    const auto parallel = optimize(GetParam(), space, sphere, cfg);
    EXPECT_EQ(parallel.trace, r.trace);
    EXPECT_EQ(parallel.best_position, r.best_position);
  }
}

TEST_P(OptimizerTest, FailedEvaluationsBecomeInfinity) {
  OptimizerConfig cfg;
  cfg.population_size = 6;
  cfg.generations = 5;
  int calls = 0;
  auto flaky = [&](const Assignment& a) -> double {
    ++calls;
    if (calls % 3 == 0) throw std::runtime_error("boom");
    if (calls % 5 == 0) return std::numeric_limits<double>::quiet_NaN();
    return sphere(a);
  };
  const auto r = optimize(GetParam(), box(2, -1, 1), flaky, cfg);
  EXPECT_TRUE(std::isfinite(r.best_fitness));
  const auto infinite = std::count_if(r.history.begin(), r.history.end(),
                                      [](const Evaluation& e) { return std::isinf(e.fitness); });
  EXPECT_GT(infinite, 0);
}

TEST_P(OptimizerTest, SphereProgress) {
  const auto space = box(3, -5, 5);
  std::vector<double> initial, final;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    OptimizerConfig cfg;
    cfg.population_size = 10;
    cfg.generations = 50;
    cfg.seed = seed;
    const auto r = optimize(GetParam(), space, sphere, cfg);
    initial.push_back(r.trace.front());
    final.push_back(r.trace.back());
  }
  EXPECT_LE(median(final), 0.01 * median(initial));
}

INSTANTIATE_TEST_SUITE_P(All, OptimizerTest, ::testing::Values(Algorithm::ga, Algorithm::de, Algorithm::pso),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(DeOptimize, NoOpSettingsKeepInitialPopulation) {
  OptimizerConfig cfg;
  cfg.population_size = 6;
  cfg.generations = 8;
  cfg.seed = 42;
  cfg.de = {0.0, 0.0, false};
  const auto space = box(3, -5, 5);
  const auto r = de_optimize(space, sphere, cfg);
  cfg.generations = 0;
  const auto init = de_optimize(space, sphere, cfg);
  ASSERT_EQ(r.final_population.size(), init.final_population.size());
  for (std::size_t i = 0; i < r.final_population.size(); ++i) {
    EXPECT_EQ(r.final_population[i].position, init.final_population[i].position);
  }
}

TEST(OptimizerConfig, InvalidConfigs) {
  OptimizerConfig cfg;
  cfg.population_size = 3;
  EXPECT_THROW(de_optimize(box(1, 0, 1), sphere, cfg), Error);
  cfg.population_size = 5;
  cfg.ga.crossover_prob = 1.5;
  EXPECT_THROW(ga_optimize(box(1, 0, 1), sphere, cfg), Error);
  cfg.ga.crossover_prob = 0.5;
  cfg.de.crossover_rate = -0.1;
  EXPECT_THROW(de_optimize(box(1, 0, 1), sphere, cfg), Error);
  cfg.population_size = 0;
  EXPECT_THROW(pso_optimize(box(1, 0, 1), sphere, cfg), Error);
}

TEST(Optimizers, IntegerDimensionsDecodeWithinBounds) {
  SearchSpace space({{"p", ParamKind::integer, 0, 5}, {"d", ParamKind::integer, 0, 3}, {"q", ParamKind::integer, 0, 5}});
  OptimizerConfig cfg;
  cfg.population_size = 8;
  cfg.generations = 10;
  for (auto alg : {Algorithm::ga, Algorithm::de, Algorithm::pso}) {
    const auto r = optimize(alg, space, [](const Assignment& a) { return std::abs(a.at("p") - 3) + a.at("d"); }, cfg);
    for (const auto& e : r.history) {
      EXPECT_GE(e.assignment.at("p"), 0);
      EXPECT_LE(e.assignment.at("p"), 5);
      EXPECT_LE(e.assignment.at("d"), 3);
      EXPECT_EQ(e.assignment.at("q"), std::round(e.assignment.at("q")));
    }
  }
}
