#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mhforecast/arima/differencing.hpp"
#include "mhforecast/error.hpp"

namespace mhf::arima {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  bool operator==(const ArimaOrder&) const = default;
  std::string to_string() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
};

struct ArimaFitConfig {
  bool include_intercept = true;
  /// Differenced length must be at least this many observations per parameter (p+q+1).
  std::size_t min_obs_per_param = 10;
  std::size_t max_iterations = 4000;
  double simplex_tolerance = 1e-9;
};

/**
 * ARMA(p, q) on the d-times differenced series:
 *   y_t = c + sum_j ar[j] y_{t-1-j} + e_t + sum_k ma[k] e_{t-1-k}
 * plus the state needed to forecast from the end of the training series.
 */
struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar;
  std::vector<double> ma;
  double intercept = 0.0;
  double noise_variance = 0.0;

  std::vector<double> differencing_seeds;
  /// Last value of each differencing level, used to integrate forecasts.
  std::vector<double> level_tails;
  /// Last p differenced observations and last q residuals, oldest first.
  std::vector<double> recent_values;
  std::vector<double> recent_residuals;

  double css = 0.0;
  double initial_css = 0.0;
  bool converged = true;
  bool ar_stationary = true;
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kCssCeiling = 1e300;

struct Coefficients {
  double intercept = 0.0;
  std::vector<double> ar;
  std::vector<double> ma;
};

inline Coefficients unpack(std::span<const double> theta, int p, int q, bool intercept) {
  Coefficients c;
  std::size_t k = 0;
  if (intercept) c.intercept = theta[k++];
  c.ar.assign(theta.begin() + k, theta.begin() + k + p);
  k += p;
  c.ma.assign(theta.begin() + k, theta.begin() + k + q);
  return c;
}

inline std::vector<double> pack(const Coefficients& c, bool intercept) {
  std::vector<double> theta;
  if (intercept) theta.push_back(c.intercept);
  theta.insert(theta.end(), c.ar.begin(), c.ar.end());
  theta.insert(theta.end(), c.ma.begin(), c.ma.end());
  return theta;
}

/// Conditional residuals; e_t = 0 for t < max(p, q). Overflow is clamped to the ceiling.
inline std::vector<double> residuals(std::span<const double> y, const Coefficients& c) {
  const std::size_t p = c.ar.size(), q = c.ma.size();
  const std::size_t m = std::max(p, q);
  std::vector<double> e(y.size(), 0.0);
  for (std::size_t t = m; t < y.size(); ++t) {
    double pred = c.intercept;
    for (std::size_t j = 0; j < p; ++j) pred += c.ar[j] * y[t - 1 - j];
    for (std::size_t k = 0; k < q; ++k) pred += c.ma[k] * e[t - 1 - k];
    e[t] = y[t] - pred;
    if (!std::isfinite(e[t])) e[t] = std::numeric_limits<double>::infinity();
  }
  return e;
}

inline double css(std::span<const double> y, const Coefficients& c) {
  const auto e = residuals(y, c);
  const std::size_t m = std::max(c.ar.size(), c.ma.size());
  double s = 0.0;
  for (std::size_t t = m; t < e.size(); ++t) s += e[t] * e[t];
  return std::isfinite(s) ? std::min(s, kCssCeiling) : kCssCeiling;
}

/// OLS with rank check; throws DegenerateFit for rank-deficient designs.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) throw Error(Errc::degenerate_fit, "singular least-squares design");
  Eigen::VectorXd beta = qr.solve(y);
  if (!beta.allFinite()) throw Error(Errc::degenerate_fit, "non-finite least-squares solution");
  return beta;
}

/// Regresses y_t on [1], y lags 1..p and optional proxy-residual lags 1..q for t >= start.
inline Coefficients regress(std::span<const double> y, std::span<const double> proxy, int p, int q, bool intercept,
                            std::size_t start) {
  const std::size_t rows = y.size() - start;
  const std::size_t cols = (intercept ? 1 : 0) + p + q;
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd target(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = start + r;
    std::size_t k = 0;
    if (intercept) x(r, k++) = 1.0;
    for (int j = 1; j <= p; ++j) x(r, k++) = y[t - j];
    for (int j = 1; j <= q; ++j) x(r, k++) = proxy[t - j];
    target(r) = y[t];
  }
  const Eigen::VectorXd beta = least_squares(x, target);
  return unpack(std::span<const double>(beta.data(), beta.size()), p, q, intercept);
}

/// Two-stage Hannan-Rissanen: long AR residuals stand in for the innovations.
inline Coefficients hannan_rissanen(std::span<const double> y, int p, int q, bool intercept) {
  if (p == 0 && q == 0) {
    Coefficients c;
    if (intercept) c.intercept = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    return c;
  }
  if (q == 0) return regress(y, {}, p, 0, intercept, static_cast<std::size_t>(p));

  const std::size_t n = y.size();
  std::size_t long_order = std::max<std::size_t>(20, 2 * static_cast<std::size_t>(p + q));
  long_order = std::max<std::size_t>(1, std::min(long_order, n / 3));
  const Coefficients long_ar = regress(y, {}, static_cast<int>(long_order), 0, intercept, long_order);
  std::vector<double> proxy(n, 0.0);
  for (std::size_t t = long_order; t < n; ++t) {
    double pred = long_ar.intercept;
    for (std::size_t j = 0; j < long_order; ++j) pred += long_ar.ar[j] * y[t - 1 - j];
    proxy[t] = y[t] - pred;
  }
  const std::size_t start = long_order + static_cast<std::size_t>(std::max(p, q));
  return regress(y, proxy, p, q, intercept, start);
}

struct SimplexProblem {
  std::span<const double> y;
  int p;
  int q;
  bool intercept;
};

inline double simplex_objective(const gsl_vector* v, void* params) {
  const auto* prob = static_cast<const SimplexProblem*>(params);
  std::vector<double> theta(v->size);
  for (std::size_t i = 0; i < v->size; ++i) theta[i] = gsl_vector_get(v, i);
  return css(prob->y, unpack(theta, prob->p, prob->q, prob->intercept));
}

struct SimplexOutcome {
  std::vector<double> theta;
  double value;
  bool converged;
  std::size_t iterations;
};

inline void disable_gsl_abort() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

inline SimplexOutcome nelder_mead(SimplexProblem problem, std::vector<double> start, std::span<const double> steps,
                                  std::size_t max_iterations, double tolerance) {
  disable_gsl_abort();
  const std::size_t n = start.size();
  gsl_multimin_function fn{&simplex_objective, n, &problem};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, steps[i]);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  bool converged = false;
  std::size_t iter = 0;
  while (iter < max_iterations) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tolerance) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  SimplexOutcome out{std::vector<double>(n), s->fval, converged, iter};
  for (std::size_t i = 0; i < n; ++i) out.theta[i] = gsl_vector_get(s->x, i);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return out;
}

/// Roots of 1 - sum a_j z^j outside the unit circle <=> companion eigenvalues inside it.
inline bool ar_is_stationary(std::span<const double> ar) {
  const auto p = static_cast<Eigen::Index>(ar.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = ar[j];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return false;
  return (solver.eigenvalues().array().abs() < 1.0).all();
}

/// Differenced-scale recursion with future innovations at zero.
inline std::vector<double> forecast_differenced(const ArimaModel& m, std::span<const double> values,
                                                std::span<const double> resid, std::size_t horizon) {
  const std::size_t p = m.ar.size(), q = m.ma.size();
  std::vector<double> y(values.begin(), values.end());
  std::vector<double> e(resid.begin(), resid.end());
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    double pred = m.intercept;
    for (std::size_t j = 0; j < p; ++j) {
      if (j < y.size()) pred += m.ar[j] * y[y.size() - 1 - j];
    }
    for (std::size_t k = 0; k < q; ++k) {
      if (k < e.size()) pred += m.ma[k] * e[e.size() - 1 - k];
    }
    out.push_back(pred);
    y.push_back(pred);
    e.push_back(0.0);
  }
  return out;
}

}  // namespace detail

/**
 * Conditional-sum-of-squares fit: Hannan-Rissanen start, Nelder-Mead refinement.
 * The refined estimate is only accepted if it lowers the CSS.
 */
inline ArimaModel fit_arima(std::span<const double> series, ArimaOrder order, const ArimaFitConfig& config = {}) {
  if (order.p < 0 || order.d < 0 || order.q < 0) throw Error(Errc::invalid_config, "negative ARIMA order");
  const auto d = static_cast<std::size_t>(order.d);
  if (series.size() <= d) throw Error(Errc::series_too_short, "series shorter than differencing order");
  const Differenced diff = difference(series, d);
  const auto& y = diff.values;
  const std::size_t needed = config.min_obs_per_param * static_cast<std::size_t>(order.p + order.q + 1);
  if (y.size() < needed) {
    throw Error(Errc::series_too_short, "differenced length " + std::to_string(y.size()) + " < " +
                                            std::to_string(needed) + " required for order " + order.to_string());
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(Errc::degenerate_fit, "non-finite observation");
  }

  const bool intercept = config.include_intercept;
  const detail::Coefficients init = detail::hannan_rissanen(y, order.p, order.q, intercept);
  ArimaModel model;
  model.order = order;
  model.initial_css = detail::css(y, init);

  detail::Coefficients best = init;
  double best_css = model.initial_css;
  // With q = 0 the regression is already the exact CSS minimizer.
  if (order.q > 0) {
    double scale = 0.0;
    for (double v : y) scale += v * v;
    scale = std::sqrt(scale / static_cast<double>(y.size()));
    std::vector<double> theta = detail::pack(init, intercept);
    std::vector<double> steps(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const bool is_intercept = intercept && i == 0;
      steps[i] = is_intercept ? std::max({0.1 * std::abs(theta[i]), 0.05 * scale, 1e-4})
                              : std::max(0.1 * std::abs(theta[i]), 0.05);
    }
    detail::SimplexProblem problem{y, order.p, order.q, intercept};
    auto outcome = detail::nelder_mead(problem, theta, steps, config.max_iterations, config.simplex_tolerance);
    // One restart from the optimum guards against a collapsed simplex.
    if (outcome.converged) {
      auto again = detail::nelder_mead(problem, outcome.theta, steps, config.max_iterations,
                                       config.simplex_tolerance);
      again.iterations += outcome.iterations;
      if (again.value <= outcome.value) outcome = std::move(again);
    }
    model.converged = outcome.converged;
    model.iterations = outcome.iterations;
    if (outcome.value < best_css) {
      best = detail::unpack(outcome.theta, order.p, order.q, intercept);
      best_css = outcome.value;
    }
  }

  model.intercept = best.intercept;
  model.ar = best.ar;
  model.ma = best.ma;
  model.css = best_css;
  const double dof = static_cast<double>(y.size()) - order.p - order.q - 1;
  model.noise_variance = std::max(0.0, best_css / dof);
  model.ar_stationary = detail::ar_is_stationary(model.ar);
  model.differencing_seeds = diff.seeds;
  model.level_tails = level_tails(series, d);

  const auto e = detail::residuals(y, best);
  model.recent_values.assign(y.end() - order.p, y.end());
  model.recent_residuals.assign(e.end() - order.q, e.end());
  return model;
}

/// Multi-step forecast in original units.
inline std::vector<double> arima_forecast(const ArimaModel& model, std::size_t horizon) {
  if (horizon == 0) throw Error(Errc::invalid_config, "horizon must be >= 1");
  const auto diff = detail::forecast_differenced(model, model.recent_values, model.recent_residuals, horizon);
  return integrate_forecast(diff, model.level_tails);
}

/**
 * One pass over `series` with the model's coefficients held fixed: residuals are
 * filtered from the start of the series, and at each origin t (index of the last
 * observed value) a `horizon`-step forecast is produced. Row i of the result
 * belongs to origins[i].
 */
inline std::vector<std::vector<double>> rolling_forecasts(const ArimaModel& model, std::span<const double> series,
                                                          std::span<const std::size_t> origins,
                                                          std::size_t horizon) {
  const auto d = static_cast<std::size_t>(model.order.d);
  if (series.size() <= d) throw Error(Errc::series_too_short, "history shorter than differencing order");
  // levels[k][i] is the k-times differenced value at original index i (valid for i >= k).
  std::vector<std::vector<double>> levels(d + 1, std::vector<double>(series.size(), 0.0));
  levels[0].assign(series.begin(), series.end());
  for (std::size_t k = 1; k <= d; ++k) {
    for (std::size_t i = k; i < series.size(); ++i) levels[k][i] = levels[k - 1][i] - levels[k - 1][i - 1];
  }
  const std::vector<double> y(levels[d].begin() + d, levels[d].end());
  const auto e = detail::residuals(y, detail::Coefficients{model.intercept, model.ar, model.ma});

  const std::size_t p = model.ar.size(), q = model.ma.size();
  std::vector<std::vector<double>> out;
  out.reserve(origins.size());
  std::vector<double> anchors(d);
  for (std::size_t origin : origins) {
    if (origin >= series.size() || origin < d) throw Error(Errc::series_too_short, "forecast origin out of range");
    const std::size_t last = origin - d;  // index into y
    const std::size_t vp = std::min(p, last + 1), vq = std::min(q, last + 1);
    const auto values = std::span<const double>(y).subspan(last + 1 - vp, vp);
    const auto resid = std::span<const double>(e).subspan(last + 1 - vq, vq);
    const auto diff = detail::forecast_differenced(model, values, resid, horizon);
    for (std::size_t k = 0; k < d; ++k) anchors[k] = levels[k][origin];
    out.push_back(integrate_forecast(diff, anchors));
  }
  return out;
}

}  // namespace mhf::arima
