#pragma once

#include <Eigen/Dense>
#include <string>

#include "mhforecast/error.hpp"

namespace mhf::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Columns of every activation matrix are batch samples.

enum class Activation { identity, relu };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

inline Matrix sigmoid(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

inline Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

inline Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

inline void check_rows(const Matrix& x, Eigen::Index expected, const char* what) {
  if (x.rows() != expected) {
    throw Error(Errc::shape_mismatch, std::string(what) + ": expected " + std::to_string(expected) +
                                          " rows, got " + std::to_string(x.rows()));
  }
}

/// h = act(W x + b), per column.
inline Matrix dense_pre(const Matrix& x, const DenseLayer& layer) {
  check_rows(x, layer.weight.cols(), "dense input");
  Matrix z = layer.weight * x;
  z.colwise() += layer.bias;
  return z;
}

inline Matrix dense_forward(const Matrix& x, const DenseLayer& layer, Activation act) {
  Matrix z = dense_pre(x, layer);
  return act == Activation::relu ? relu(z) : z;
}

/// Accumulates dW, db for a dense layer and returns dL/dx.
inline Matrix dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& dz, DenseLayer& grad) {
  grad.weight.noalias() += dz * x.transpose();
  grad.bias += dz.rowwise().sum();
  return layer.weight.transpose() * dz;
}

/// Stacks [h_prev; x] as the gate input.
inline Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix s(top.rows() + bottom.rows(), top.cols());
  s.topRows(top.rows()) = top;
  s.bottomRows(bottom.rows()) = bottom;
  return s;
}

// ---------------------------------------------------------------------------
// LSTM

struct LstmCell {
  Matrix w_input, w_forget, w_output, w_candidate;  // hidden x (hidden + input)
  Vector b_input, b_forget, b_output, b_candidate;
};

struct LstmCache {
  Matrix concat;  // [h_prev; x]
  Matrix input_gate, forget_gate, output_gate, candidate;
  Matrix c_prev, tanh_c;
};

struct LstmStep {
  Matrix h;
  Matrix c;
  LstmCache cache;
};

inline Matrix gate_pre(const Matrix& w, const Vector& b, const Matrix& s) {
  Matrix a = w * s;
  a.colwise() += b;
  return a;
}

/**
 * i = sig(W_i [h, x] + b_i), f = sig(W_f [h, x] + b_f), o = sig(W_o [h, x] + b_o),
 * g = tanh(W_c [h, x] + b_c), c' = f*c + i*g, h' = o*tanh(c').
 */
inline LstmStep lstm_cell(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev, const LstmCell& cell) {
  const Eigen::Index hidden = cell.w_input.rows();
  check_rows(h_prev, hidden, "lstm h_prev");
  check_rows(c_prev, hidden, "lstm c_prev");
  check_rows(x, cell.w_input.cols() - hidden, "lstm x");
  LstmStep step;
  auto& k = step.cache;
  k.concat = stack(h_prev, x);
  k.input_gate = sigmoid(gate_pre(cell.w_input, cell.b_input, k.concat));
  k.forget_gate = sigmoid(gate_pre(cell.w_forget, cell.b_forget, k.concat));
  k.output_gate = sigmoid(gate_pre(cell.w_output, cell.b_output, k.concat));
  k.candidate = gate_pre(cell.w_candidate, cell.b_candidate, k.concat).array().tanh().matrix();
  k.c_prev = c_prev;
  step.c = (k.forget_gate.array() * c_prev.array() + k.input_gate.array() * k.candidate.array()).matrix();
  k.tanh_c = step.c.array().tanh().matrix();
  step.h = (k.output_gate.array() * k.tanh_c.array()).matrix();
  return step;
}

struct LstmBackward {
  Matrix dh_prev, dc_prev, dx;
};

inline LstmBackward lstm_cell_backward(const LstmCell& cell, const LstmCache& k, const Matrix& dh, const Matrix& dc_next,
                                       LstmCell& grad) {
  const Eigen::Index hidden = cell.w_input.rows();
  const auto i = k.input_gate.array();
  const auto f = k.forget_gate.array();
  const auto o = k.output_gate.array();
  const auto g = k.candidate.array();
  const auto tc = k.tanh_c.array();

  const Matrix d_o = (dh.array() * tc * o * (1.0 - o)).matrix();
  const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
  const Matrix d_i = (dc * g * i * (1.0 - i)).matrix();
  const Matrix d_f = (dc * k.c_prev.array() * f * (1.0 - f)).matrix();
  const Matrix d_g = (dc * i * (1.0 - g.square())).matrix();

  const Matrix st = k.concat.transpose();
  grad.w_input.noalias() += d_i * st;
  grad.w_forget.noalias() += d_f * st;
  grad.w_output.noalias() += d_o * st;
  grad.w_candidate.noalias() += d_g * st;
  grad.b_input += d_i.rowwise().sum();
  grad.b_forget += d_f.rowwise().sum();
  grad.b_output += d_o.rowwise().sum();
  grad.b_candidate += d_g.rowwise().sum();

  Matrix ds = cell.w_input.transpose() * d_i;
  ds.noalias() += cell.w_forget.transpose() * d_f;
  ds.noalias() += cell.w_output.transpose() * d_o;
  ds.noalias() += cell.w_candidate.transpose() * d_g;
  return {ds.topRows(hidden), (dc * f).matrix(), ds.bottomRows(ds.rows() - hidden)};
}

// ---------------------------------------------------------------------------
// GRU

struct GruCell {
  Matrix w_update, w_reset, w_candidate;  // hidden x (hidden + input)
  Vector b_update, b_reset, b_candidate;
};

struct GruCache {
  Matrix concat;        // [h_prev; x]
  Matrix reset_concat;  // [r * h_prev; x]
  Matrix update_gate, reset_gate, candidate, h_prev;
};

struct GruStep {
  Matrix h;
  GruCache cache;
};

/**
 * z = sig(W_z [h, x] + b_z), r = sig(W_r [h, x] + b_r),
 * h~ = tanh(W [r*h, x] + b), h' = (1 - z)*h + z*h~.
 */
inline GruStep gru_cell(const Matrix& x, const Matrix& h_prev, const GruCell& cell) {
  const Eigen::Index hidden = cell.w_update.rows();
  check_rows(h_prev, hidden, "gru h_prev");
  check_rows(x, cell.w_update.cols() - hidden, "gru x");
  GruStep step;
  auto& k = step.cache;
  k.h_prev = h_prev;
  k.concat = stack(h_prev, x);
  k.update_gate = sigmoid(gate_pre(cell.w_update, cell.b_update, k.concat));
  k.reset_gate = sigmoid(gate_pre(cell.w_reset, cell.b_reset, k.concat));
  k.reset_concat = stack((k.reset_gate.array() * h_prev.array()).matrix(), x);
  k.candidate = gate_pre(cell.w_candidate, cell.b_candidate, k.reset_concat).array().tanh().matrix();
  const auto z = k.update_gate.array();
  step.h = ((1.0 - z) * h_prev.array() + z * k.candidate.array()).matrix();
  return step;
}

struct GruBackward {
  Matrix dh_prev, dx;
};

inline GruBackward gru_cell_backward(const GruCell& cell, const GruCache& k, const Matrix& dh, GruCell& grad) {
  const Eigen::Index hidden = cell.w_update.rows();
  const auto z = k.update_gate.array();
  const auto r = k.reset_gate.array();
  const auto hh = k.candidate.array();
  const auto hp = k.h_prev.array();

  const Matrix d_cand = (dh.array() * z * (1.0 - hh.square())).matrix();
  const Matrix d_z = (dh.array() * (hh - hp) * z * (1.0 - z)).matrix();
  grad.w_candidate.noalias() += d_cand * k.reset_concat.transpose();
  grad.b_candidate += d_cand.rowwise().sum();
  const Matrix d_reset_concat = cell.w_candidate.transpose() * d_cand;
  const auto d_rh = d_reset_concat.topRows(hidden).array();
  const Matrix d_r = (d_rh * hp * r * (1.0 - r)).matrix();

  const Matrix st = k.concat.transpose();
  grad.w_update.noalias() += d_z * st;
  grad.w_reset.noalias() += d_r * st;
  grad.b_update += d_z.rowwise().sum();
  grad.b_reset += d_r.rowwise().sum();

  Matrix ds = cell.w_update.transpose() * d_z;
  ds.noalias() += cell.w_reset.transpose() * d_r;
  Matrix dh_prev = (dh.array() * (1.0 - z) + d_rh * r).matrix();
  dh_prev += ds.topRows(hidden);
  Matrix dx = ds.bottomRows(ds.rows() - hidden) + d_reset_concat.bottomRows(d_reset_concat.rows() - hidden);
  return {std::move(dh_prev), std::move(dx)};
}

}  // namespace mhf::nn
