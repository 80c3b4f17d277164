#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mhforecast/nn/network.hpp"

namespace mhf::nn {

struct TensorCheck {
  std::string name;
  double relative_error = 0.0;
};

struct GradientCheck {
  std::vector<TensorCheck> tensors;
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

/// Random standard-normal batch of the right shape.
inline std::pair<Matrix, Matrix> random_batch(const NetworkSpec& spec, Eigen::Index batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(spec.input_width()), batch);
  Matrix y(static_cast<Eigen::Index>(spec.horizon), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
  return {x, y};
}

/// Biases start at zero under glorot init; give them noise so their gradients are generic.
inline Network randomized_network(const NetworkSpec& spec, std::uint64_t seed) {
  Network net = Network::glorot(spec, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> g(0.0, 0.1);
  net.parameters().for_each_tensor([&](const std::string&, auto& t) {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vector>) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = g(rng);
    }
  });
  return net;
}

/**
 * Central finite differences against Network::backprop, every parameter. Error per
 * tensor is max|analytic - numeric| / max(max|analytic|, max|numeric|); an
 * elementwise ratio is meaningless for entries whose true gradient is ~0.
 */
inline GradientCheck check_gradients(const Network& net, const Matrix& x, const Matrix& y, double step = 1e-5) {
  const auto analytic = net.backprop(x, y).gradient.flatten();
  Network probe = net;
  Vector numeric(analytic.size());
  Eigen::Index at = 0;
  probe.parameters().for_each_tensor([&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      double& w = t.data()[i];
      const double keep = w;
      w = keep + step;
      const double up = probe.loss(x, y);
      w = keep - step;
      const double down = probe.loss(x, y);
      w = keep;
      numeric[at + i] = (up - down) / (2.0 * step);
    }
    at += t.size();
  });

  GradientCheck out;
  out.parameters = static_cast<std::size_t>(numeric.size());
  at = 0;
  net.parameters().for_each_tensor([&](const std::string& name, const auto& t) {
    const auto a = analytic.segment(at, t.size());
    const auto n = numeric.segment(at, t.size());
    const double scale = std::max(a.cwiseAbs().maxCoeff(), n.cwiseAbs().maxCoeff());
    const double diff = (a - n).cwiseAbs().maxCoeff();
    const double rel = scale > 0.0 ? diff / scale : 0.0;
    out.tensors.push_back({name, rel});
    out.max_relative_error = std::max(out.max_relative_error, rel);
    at += t.size();
  });
  return out;
}

}  // namespace mhf::nn
