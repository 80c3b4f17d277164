#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "mhforecast/error.hpp"
#include "mhforecast/metaheuristics/search_space.hpp"
#include "mhforecast/random.hpp"

namespace mhf::opt {

namespace detail {

inline void same_dimension(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "operand dimensions differ");
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace detail

/**
 * Roulette-wheel weights for a minimization objective: w_i = f_max - f_i + eps with
 * f_max the worst finite fitness and eps = 1e-12 * (1 + |f_max|). Non-finite
 * fitnesses get zero weight; if nothing is finite the wheel is uniform.
 */
inline std::vector<double> roulette_weights(std::span<const double> fitness) {
  if (fitness.empty()) throw Error(Errc::empty_population, "roulette over an empty population");
  double worst = -std::numeric_limits<double>::infinity();
  for (double f : fitness)
    if (std::isfinite(f)) worst = std::max(worst, f);
  std::vector<double> w(fitness.size(), 0.0);
  if (!std::isfinite(worst)) {
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  const double eps = 1e-12 * (1.0 + std::abs(worst));
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    if (std::isfinite(fitness[i])) w[i] = worst - fitness[i] + eps;
  }
  return w;
}

/// Two parent indices; the second draw is repeated once if it hits the first.
inline std::pair<std::size_t, std::size_t> roulette_select(std::span<const double> fitness, Rng& rng) {
  const auto w = roulette_weights(fitness);
  std::discrete_distribution<std::size_t> wheel(w.begin(), w.end());
  const std::size_t first = wheel(rng);
  std::size_t second = wheel(rng);
  if (second == first) second = wheel(rng);
  return {first, second};
}

inline Position uniform_crossover(std::span<const double> p1, std::span<const double> p2, double crossover_prob,
                                  Rng& rng) {
  detail::same_dimension(p1, p2);
  Position child(p1.begin(), p1.end());
  if (detail::uniform01(rng) >= crossover_prob) return child;
  for (std::size_t j = 0; j < child.size(); ++j) {
    if (detail::uniform01(rng) >= 0.5) child[j] = p2[j];
  }
  return child;
}

/// Bounded Gaussian perturbation, sigma relative to each coordinate's internal width.
inline Position ga_mutate(std::span<const double> position, double mutation_prob, double mutation_sigma,
                          const SearchSpace& space, Rng& rng) {
  space.check(position);
  Position out(position.begin(), position.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (detail::uniform01(rng) < mutation_prob) {
      out[j] += gauss(rng) * mutation_sigma * space.width(j);
    }
  }
  space.clamp(out);
  return out;
}

/// v = x_r1 + F * (x_r2 - x_r3), clamped.
inline Position de_mutate(std::span<const double> x_r1, std::span<const double> x_r2, std::span<const double> x_r3,
                          double scale_factor, const SearchSpace& space) {
  detail::same_dimension(x_r1, x_r2);
  detail::same_dimension(x_r1, x_r3);
  Position v(x_r1.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = x_r1[j] + scale_factor * (x_r2[j] - x_r3[j]);
  space.clamp(v);
  return v;
}

/// Binomial crossover: u_j = v_j when rand <= CR, else x_j. With `force_jrand` one
/// random coordinate is always taken from v.
inline Position de_crossover(std::span<const double> x, std::span<const double> v, double crossover_rate,
                             bool force_jrand, Rng& rng) {
  detail::same_dimension(x, v);
  Position u(x.begin(), x.end());
  std::size_t jrand = x.size();
  if (force_jrand && !x.empty()) {
    jrand = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
  }
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (detail::uniform01(rng) <= crossover_rate || j == jrand) u[j] = v[j];
  }
  return u;
}

struct Particle {
  Position position;
  Position velocity;
};

struct PsoCoefficients {
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
};

/**
 * Velocity first, then position:
 *   v <- w*v + c1*r1 (p_i - x) + c2*r2 (p_g - x);  x <- x + v
 * Coordinates that leave the box are clamped and their velocity zeroed.
 */
inline void pso_update(Particle& particle, std::span<const double> personal_best, std::span<const double> global_best,
                       const PsoCoefficients& c, const SearchSpace& space, Rng& rng) {
  space.check(particle.position);
  detail::same_dimension(particle.position, particle.velocity);
  detail::same_dimension(particle.position, personal_best);
  detail::same_dimension(particle.position, global_best);
  auto& x = particle.position;
  auto& v = particle.velocity;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r1 = detail::uniform01(rng);
    const double r2 = detail::uniform01(rng);
    v[j] = c.inertia * v[j] + c.cognitive * r1 * (personal_best[j] - x[j]) + c.social * r2 * (global_best[j] - x[j]);
    x[j] += v[j];
    if (x[j] < space.lower(j)) {
      x[j] = space.lower(j);
      v[j] = 0.0;
    } else if (x[j] > space.upper(j)) {
      x[j] = space.upper(j);
      v[j] = 0.0;
    }
  }
}

}  // namespace mhf::opt
