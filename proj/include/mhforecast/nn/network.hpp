#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "mhforecast/error.hpp"
#include "mhforecast/nn/cells.hpp"
#include "mhforecast/random.hpp"

namespace mhf::nn {

enum class NetworkKind { ann, lstm, gru };

constexpr std::string_view to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::ann: return "ANN";
    case NetworkKind::lstm: return "LSTM";
    case NetworkKind::gru: return "GRU";
  }
  return "?";
}

struct NetworkSpec {
  NetworkKind kind = NetworkKind::ann;
  std::size_t features = 8;
  std::size_t lookback = 3;
  std::size_t horizon = 24;
  /// ANN hidden widths (ReLU); empty gives a single linear layer.
  std::vector<std::size_t> ann_hidden{64, 36};
  /// Recurrent models: per-step dense projection width and recurrent state width.
  std::size_t projection = 36;
  std::size_t recurrent = 64;
  /// Keep the GRU update/reset gate biases at zero (gates without bias terms).
  bool zero_gru_gate_bias = false;

  std::size_t input_width() const { return features * lookback; }
  bool recurrent_kind() const { return kind != NetworkKind::ann; }
  bool operator==(const NetworkSpec&) const = default;
};

/**
 * Trainable tensors. ANN: dense = {hidden..., output}. Recurrent:
 * dense = {projection, output} with the cell in between. Tensor order (the flat
 * view order) is dense[0], cell tensors, remaining dense layers.
 */
struct Parameters {
  NetworkKind kind = NetworkKind::ann;
  std::vector<DenseLayer> dense;
  LstmCell lstm;
  GruCell gru;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    if (self.dense.empty()) return;
    f("dense0.weight", self.dense[0].weight);
    f("dense0.bias", self.dense[0].bias);
    if (self.kind == NetworkKind::lstm) {
      f("lstm.w_input", self.lstm.w_input);
      f("lstm.b_input", self.lstm.b_input);
      f("lstm.w_forget", self.lstm.w_forget);
      f("lstm.b_forget", self.lstm.b_forget);
      f("lstm.w_output", self.lstm.w_output);
      f("lstm.b_output", self.lstm.b_output);
      f("lstm.w_candidate", self.lstm.w_candidate);
      f("lstm.b_candidate", self.lstm.b_candidate);
    } else if (self.kind == NetworkKind::gru) {
      f("gru.w_update", self.gru.w_update);
      f("gru.b_update", self.gru.b_update);
      f("gru.w_reset", self.gru.w_reset);
      f("gru.b_reset", self.gru.b_reset);
      f("gru.w_candidate", self.gru.w_candidate);
      f("gru.b_candidate", self.gru.b_candidate);
    }
    for (std::size_t l = 1; l < self.dense.size(); ++l) {
      const std::string prefix = "dense" + std::to_string(l);
      f(prefix + ".weight", self.dense[l].weight);
      f(prefix + ".bias", self.dense[l].bias);
    }
  }

  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, std::forward<F>(f));
  }

  std::size_t size() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  Vector flatten() const {
    Vector flat(static_cast<Eigen::Index>(size()));
    Eigen::Index at = 0;
    for_each_tensor([&](const std::string&, const auto& t) {
      flat.segment(at, t.size()) = Eigen::Map<const Vector>(t.data(), t.size());
      at += t.size();
    });
    return flat;
  }

  void unflatten(const Vector& flat) {
    if (flat.size() != static_cast<Eigen::Index>(size())) {
      throw Error(Errc::shape_mismatch, "flat parameter vector has wrong length");
    }
    Eigen::Index at = 0;
    for_each_tensor([&](const std::string&, auto& t) {
      Eigen::Map<Vector>(t.data(), t.size()) = flat.segment(at, t.size());
      at += t.size();
    });
  }

  void set_zero() {
    for_each_tensor([](const std::string&, auto& t) { t.setZero(); });
  }

  /// this += scale * other
  void axpy(double scale, const Parameters& other) {
    std::vector<const double*> src;
    std::vector<Eigen::Index> len;
    other.for_each_tensor([&](const std::string&, const auto& t) {
      src.push_back(t.data());
      len.push_back(t.size());
    });
    std::size_t k = 0;
    for_each_tensor([&](const std::string&, auto& t) {
      Eigen::Map<Vector>(t.data(), t.size()) += scale * Eigen::Map<const Vector>(src[k], len[k]);
      ++k;
    });
  }

  bool operator==(const Parameters& other) const { return kind == other.kind && flatten() == other.flatten(); }
};

inline DenseLayer zero_dense(std::size_t out, std::size_t in) {
  return {Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
          Vector::Zero(static_cast<Eigen::Index>(out))};
}

inline Parameters zero_parameters(const NetworkSpec& spec) {
  Parameters p;
  p.kind = spec.kind;
  if (spec.kind == NetworkKind::ann) {
    std::size_t in = spec.input_width();
    for (std::size_t width : spec.ann_hidden) {
      p.dense.push_back(zero_dense(width, in));
      in = width;
    }
    p.dense.push_back(zero_dense(spec.horizon, in));
    return p;
  }
  p.dense = {zero_dense(spec.projection, spec.features), zero_dense(spec.horizon, spec.recurrent)};
  const auto h = static_cast<Eigen::Index>(spec.recurrent);
  const auto in = static_cast<Eigen::Index>(spec.recurrent + spec.projection);
  if (spec.kind == NetworkKind::lstm) {
    for (Matrix* w : {&p.lstm.w_input, &p.lstm.w_forget, &p.lstm.w_output, &p.lstm.w_candidate}) *w = Matrix::Zero(h, in);
    for (Vector* b : {&p.lstm.b_input, &p.lstm.b_forget, &p.lstm.b_output, &p.lstm.b_candidate}) *b = Vector::Zero(h);
  } else {
    for (Matrix* w : {&p.gru.w_update, &p.gru.w_reset, &p.gru.w_candidate}) *w = Matrix::Zero(h, in);
    for (Vector* b : {&p.gru.b_update, &p.gru.b_reset, &p.gru.b_candidate}) *b = Vector::Zero(h);
  }
  return p;
}

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
inline Parameters glorot_parameters(const NetworkSpec& spec, std::uint64_t seed) {
  Parameters p = zero_parameters(spec);
  Rng rng(seed);
  p.for_each_tensor([&](const std::string&, auto& t) {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vector>) return;  // biases stay zero
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  });
  return p;
}

struct BackpropResult {
  double loss = 0.0;
  Parameters gradient;
};

/**
 * ANN: dense(ReLU) for each hidden width -> dense(linear).
 * LSTM/GRU: per-step dense projection (ReLU) -> cell unrolled over the lookback
 * (zero initial state) -> dense(linear) on the final hidden state.
 *
 * Inputs are (input_width x batch); column j is one flattened window with step t
 * occupying rows [t*features, (t+1)*features).
 */
class Network {
 public:
  explicit Network(NetworkSpec spec) : spec_(spec), params_(zero_parameters(spec)) {}
  Network(NetworkSpec spec, Parameters params) : spec_(spec), params_(std::move(params)) {
    if (params_.kind != spec_.kind || params_.size() != zero_parameters(spec_).size()) {
      throw Error(Errc::shape_mismatch, "parameters do not match network spec");
    }
  }

  static Network glorot(const NetworkSpec& spec, std::uint64_t seed) { return {spec, glorot_parameters(spec, seed)}; }

  const NetworkSpec& spec() const { return spec_; }
  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }

  Matrix forward(const Matrix& inputs) const { return run(inputs, nullptr); }

  Vector forward_window(std::span<const double> window) const {
    const Matrix x = Eigen::Map<const Vector>(window.data(), static_cast<Eigen::Index>(window.size()));
    return run(x, nullptr).col(0);
  }

  /// Mean over batch and outputs of the squared error.
  double loss(const Matrix& inputs, const Matrix& targets) const {
    if (inputs.cols() == 0) throw Error(Errc::shape_mismatch, "empty batch");
    check_rows(targets, static_cast<Eigen::Index>(spec_.horizon), "targets");
    if (targets.cols() != inputs.cols()) throw Error(Errc::shape_mismatch, "inputs/targets batch differ");
    const Matrix err = run(inputs, nullptr) - targets;
    return err.squaredNorm() / static_cast<double>(err.size());
  }

  /// The loss above together with its exact gradient.
  BackpropResult backprop(const Matrix& inputs, const Matrix& targets) const {
    if (inputs.cols() == 0) throw Error(Errc::shape_mismatch, "empty batch");
    check_rows(targets, static_cast<Eigen::Index>(spec_.horizon), "targets");
    if (targets.cols() != inputs.cols()) throw Error(Errc::shape_mismatch, "inputs/targets batch differ");
    Trace trace;
    const Matrix out = run(inputs, &trace);
    const Matrix err = out - targets;
    const double denom = static_cast<double>(err.size());
    BackpropResult res{err.squaredNorm() / denom, zero_parameters(spec_)};
    if (!std::isfinite(res.loss)) throw Error(Errc::non_finite_loss, "loss is not finite");
    const Matrix d_out = (2.0 / denom) * err;
    auto& g = res.gradient;

    if (spec_.kind == NetworkKind::ann) {
      Matrix d = d_out;
      for (std::size_t l = params_.dense.size(); l-- > 0;) {
        const Matrix& below = l == 0 ? inputs : trace.act[l - 1];
        d = dense_backward(params_.dense[l], below, d, g.dense[l]);
        if (l > 0) d = d.cwiseProduct(relu_mask(trace.pre[l - 1]));
      }
      return res;
    }

    const auto f = static_cast<Eigen::Index>(spec_.features);
    const auto steps = spec_.lookback;
    Matrix dh = dense_backward(params_.dense[1], trace.hidden.back(), d_out, g.dense[1]);
    Matrix dc = Matrix::Zero(dh.rows(), dh.cols());
    for (std::size_t t = steps; t-- > 0;) {
      Matrix dproj;
      if (spec_.kind == NetworkKind::lstm) {
        auto b = lstm_cell_backward(params_.lstm, trace.lstm[t], dh, dc, g.lstm);
        dh = std::move(b.dh_prev);
        dc = std::move(b.dc_prev);
        dproj = std::move(b.dx);
      } else {
        auto b = gru_cell_backward(params_.gru, trace.gru[t], dh, g.gru);
        dh = std::move(b.dh_prev);
        dproj = std::move(b.dx);
      }
      dproj = dproj.cwiseProduct(relu_mask(trace.pre[t]));
      dense_backward(params_.dense[0], inputs.middleRows(static_cast<Eigen::Index>(t) * f, f), dproj, g.dense[0]);
    }
    if (spec_.kind == NetworkKind::gru && spec_.zero_gru_gate_bias) {
      g.gru.b_update.setZero();
      g.gru.b_reset.setZero();
    }
    return res;
  }

 private:
  struct Trace {
    std::vector<Matrix> pre;  // ANN: hidden pre-activations; recurrent: projection pre-activations per step
    std::vector<Matrix> act;
    std::vector<Matrix> hidden;
    std::vector<LstmCache> lstm;
    std::vector<GruCache> gru;
  };

  Matrix run(const Matrix& inputs, Trace* trace) const {
    check_rows(inputs, static_cast<Eigen::Index>(spec_.input_width()), "network input");
    if (spec_.kind == NetworkKind::ann) {
      const std::size_t last = params_.dense.size() - 1;
      Matrix a = inputs;
      for (std::size_t l = 0; l < last; ++l) {
        Matrix z = dense_pre(a, params_.dense[l]);
        a = relu(z);
        if (trace) {
          trace->pre.push_back(std::move(z));
          trace->act.push_back(a);
        }
      }
      return dense_pre(a, params_.dense[last]);
    }
    const auto f = static_cast<Eigen::Index>(spec_.features);
    const auto batch = inputs.cols();
    const auto width = static_cast<Eigen::Index>(spec_.recurrent);
    Matrix h = Matrix::Zero(width, batch);
    Matrix c = Matrix::Zero(width, batch);
    for (std::size_t t = 0; t < spec_.lookback; ++t) {
      Matrix z = dense_pre(inputs.middleRows(static_cast<Eigen::Index>(t) * f, f), params_.dense[0]);
      const Matrix x = relu(z);
      if (spec_.kind == NetworkKind::lstm) {
        auto step = lstm_cell(x, h, c, params_.lstm);
        h = std::move(step.h);
        c = std::move(step.c);
        if (trace) trace->lstm.push_back(std::move(step.cache));
      } else {
        auto step = gru_cell(x, h, params_.gru);
        h = std::move(step.h);
        if (trace) trace->gru.push_back(std::move(step.cache));
      }
      if (trace) trace->pre.push_back(std::move(z));
    }
    Matrix out = dense_pre(h, params_.dense[1]);
    if (trace) trace->hidden.push_back(std::move(h));
    return out;
  }

  NetworkSpec spec_;
  Parameters params_;
};

inline Vector network_forward(const Network& model, std::span<const double> window) {
  return model.forward_window(window);
}

}  // namespace mhf::nn
