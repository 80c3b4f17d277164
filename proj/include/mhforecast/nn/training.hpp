#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mhforecast/data/windows.hpp"
#include "mhforecast/error.hpp"
#include "mhforecast/nn/network.hpp"
#include "mhforecast/random.hpp"

namespace mhf::nn {

struct TrainingConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw Error(Errc::invalid_config, "learning_rate must be finite and >= 0");
    }
    if (batch_size < 1 || epochs < 1) throw Error(Errc::invalid_config, "batch_size and epochs must be >= 1");
  }
};

struct LossCurve {
  std::vector<double> train_mse;
  std::vector<double> validation_mse;
};

struct TrainResult {
  Network model;
  LossCurve curve;
};

/// Input matrix (input_width x num_samples), one flattened window per column.
inline Matrix input_matrix(const data::WindowedDataset& ds) {
  return Eigen::Map<const Matrix>(ds.inputs.data(), static_cast<Eigen::Index>(ds.input_width()),
                                  static_cast<Eigen::Index>(ds.num_samples));
}

/// Target matrix (horizon x num_samples).
inline Matrix target_matrix(const data::WindowedDataset& ds) {
  return Eigen::Map<const Matrix>(ds.targets.data(), static_cast<Eigen::Index>(ds.horizon),
                                  static_cast<Eigen::Index>(ds.num_samples));
}

inline void check_dataset(const NetworkSpec& spec, const data::WindowedDataset& ds) {
  const bool want_flat = spec.kind == NetworkKind::ann;
  if ((ds.layout == data::WindowLayout::flat) != want_flat) {
    throw Error(Errc::shape_mismatch, "dataset layout does not match network kind");
  }
  if (ds.num_features != spec.features || ds.lookback != spec.lookback || ds.horizon != spec.horizon) {
    throw Error(Errc::shape_mismatch, "dataset dimensions do not match network spec");
  }
}

/// Forward pass in chunks; returns (num_samples x horizon).
inline Matrix predict_windows(const Network& model, const Matrix& inputs, Eigen::Index chunk = 512) {
  Matrix out(inputs.cols(), static_cast<Eigen::Index>(model.spec().horizon));
  for (Eigen::Index start = 0; start < inputs.cols(); start += chunk) {
    const Eigen::Index n = std::min(chunk, inputs.cols() - start);
    out.middleRows(start, n) = model.forward(inputs.middleCols(start, n)).transpose();
  }
  return out;
}

inline Matrix predict_windows(const Network& model, const data::WindowedDataset& ds) {
  check_dataset(model.spec(), ds);
  return predict_windows(model, input_matrix(ds));
}

inline double dataset_mse(const Network& model, const Matrix& inputs, const Matrix& targets) {
  if (inputs.cols() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Matrix pred = predict_windows(model, inputs);
  return (pred - targets.transpose()).squaredNorm() / static_cast<double>(targets.size());
}

inline std::uint64_t init_seed(const TrainingConfig& config) { return derive_seed(config.seed, "init"); }

/// Glorot-initialized network that sgd_train starts from for this config.
inline Network initial_network(const NetworkSpec& spec, const TrainingConfig& config) {
  return Network::glorot(spec, init_seed(config));
}

/**
 * Mini-batch SGD, w <- w - lr * dL/dw with L the batch MSE. Each epoch reshuffles
 * (seeded) and the last batch may be short. The train curve is the sample-weighted
 * mean of the batch losses seen during the epoch; validation MSE is evaluated after it.
 * Throws NonFiniteLoss on divergence.
 */
inline TrainResult sgd_train(Network model, const data::WindowedDataset& train, const data::WindowedDataset& val,
                             const TrainingConfig& config) {
  config.validate();
  check_dataset(model.spec(), train);
  check_dataset(model.spec(), val);
  if (train.num_samples == 0) throw Error(Errc::series_too_short, "empty training set");

  const Matrix x_train = input_matrix(train), y_train = target_matrix(train);
  const Matrix x_val = input_matrix(val), y_val = target_matrix(val);
  const auto n = static_cast<Eigen::Index>(train.num_samples);
  const auto batch = static_cast<Eigen::Index>(std::min<std::size_t>(config.batch_size, train.num_samples));

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  LossCurve curve;
  Matrix xb, yb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index size = std::min(batch, n - start);
      xb.resize(x_train.rows(), size);
      yb.resize(y_train.rows(), size);
      for (Eigen::Index j = 0; j < size; ++j) {
        const auto src = order[static_cast<std::size_t>(start + j)];
        xb.col(j) = x_train.col(src);
        yb.col(j) = y_train.col(src);
      }
      const BackpropResult step = model.backprop(xb, yb);
      weighted += step.loss * static_cast<double>(size);
      if (config.learning_rate != 0.0) model.parameters().axpy(-config.learning_rate, step.gradient);
    }
    curve.train_mse.push_back(weighted / static_cast<double>(n));
    const double v = dataset_mse(model, x_val, y_val);
    if (val.num_samples > 0 && !std::isfinite(v)) {
      throw Error(Errc::non_finite_loss, "validation loss is not finite");
    }
    curve.validation_mse.push_back(v);
  }
  return {std::move(model), std::move(curve)};
}

inline TrainResult sgd_train(const NetworkSpec& spec, const data::WindowedDataset& train,
                             const data::WindowedDataset& val, const TrainingConfig& config) {
  return sgd_train(initial_network(spec, config), train, val, config);
}

}  // namespace mhf::nn
