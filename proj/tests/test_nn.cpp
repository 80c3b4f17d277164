#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mhforecast/data/clean.hpp"
#include "mhforecast/data/synthetic.hpp"
#include "mhforecast/data/windows.hpp"
#include "mhforecast/nn/gradcheck.hpp"
#include "mhforecast/nn/serialize.hpp"
#include "mhforecast/nn/training.hpp"

using namespace mhf;
using namespace mhf::nn;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) { return random_matrix(n, 1, rng, sd); }

NetworkSpec spec_for(NetworkKind kind) {
  NetworkSpec s;
  s.kind = kind;
  return s;
}

// Reduced widths keep the exhaustive finite-difference sweep quick in the unit suite.
NetworkSpec small_spec(NetworkKind kind) {
  NetworkSpec s;
  s.kind = kind;
  s.features = 3;
  s.lookback = 3;
  s.horizon = 4;
  s.ann_hidden = {7, 5};
  s.projection = 5;
  s.recurrent = 6;
  return s;
}

data::WindowedDataset windows(int days, std::uint64_t seed, data::WindowLayout layout) {
  auto raw = data::generate_synthetic_weather({.days = days, .seed = seed});
  auto clean = data::clean_missing(raw, 0.5, data::FillPolicy::linear_interpolate);
  // Crude standardization is enough here; the scaler has its own tests.
  for (std::size_t c = 0; c < clean.cols(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < clean.rows(); ++r) mean += clean.at(r, c);
    mean /= static_cast<double>(clean.rows());
    for (std::size_t r = 0; r < clean.rows(); ++r) sq += std::pow(clean.at(r, c) - mean, 2);
    const double sd = std::sqrt(sq / static_cast<double>(clean.rows()));
    for (std::size_t r = 0; r < clean.rows(); ++r) clean.at(r, c) = (clean.at(r, c) - mean) / sd;
  }
  return data::make_windows(clean, "temperature", 3, 24, layout);
}

data::WindowLayout layout_for(NetworkKind k) {
  return k == NetworkKind::ann ? data::WindowLayout::flat : data::WindowLayout::sequential;
}

double sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace

// ---------------------------------------------------------------------------
// dense

TEST(Dense, ZeroLayerGivesZero) {
  DenseLayer l{Matrix::Zero(3, 2), Vector::Zero(3)};
  EXPECT_TRUE(dense_forward(col({1.5, -2.0}), l, Activation::relu).isZero(0.0));
}

TEST(Dense, IdentityLayer) {
  DenseLayer l{Matrix::Identity(3, 3), Vector::Zero(3)};
  const Matrix x = col({1, -2, 3});
  EXPECT_EQ(dense_forward(x, l, Activation::identity), x);
}

TEST(Dense, HandArithmetic) {
  DenseLayer l{Matrix{{1.0, 1.0}}, Vector::Constant(1, 0.5)};
  const Matrix h = dense_forward(col({1, -1}), l, Activation::relu);
  ASSERT_EQ(h.rows(), 1);
  EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
  DenseLayer neg{Matrix{{1.0, 1.0}}, Vector::Constant(1, -0.5)};
  EXPECT_DOUBLE_EQ(dense_forward(col({1, -1}), neg, Activation::relu)(0, 0), 0.0);
}

TEST(Dense, ShapeMismatchThrows) {
  DenseLayer l{Matrix::Zero(3, 2), Vector::Zero(3)};
  try {
    dense_forward(col({1, 2, 3}), l, Activation::relu);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
}

// ---------------------------------------------------------------------------
// LSTM

namespace {

LstmCell zero_lstm(Eigen::Index hidden, Eigen::Index input) {
  LstmCell c;
  for (Matrix* w : {&c.w_input, &c.w_forget, &c.w_output, &c.w_candidate}) *w = Matrix::Zero(hidden, hidden + input);
  for (Vector* b : {&c.b_input, &c.b_forget, &c.b_output, &c.b_candidate}) *b = Vector::Zero(hidden);
  return c;
}

GruCell zero_gru(Eigen::Index hidden, Eigen::Index input) {
  GruCell c;
  for (Matrix* w : {&c.w_update, &c.w_reset, &c.w_candidate}) *w = Matrix::Zero(hidden, hidden + input);
  for (Vector* b : {&c.b_update, &c.b_reset, &c.b_candidate}) *b = Vector::Zero(hidden);
  return c;
}

LstmCell random_lstm(Eigen::Index hidden, Eigen::Index input, std::mt19937_64& rng) {
  LstmCell c = zero_lstm(hidden, input);
  for (Matrix* w : {&c.w_input, &c.w_forget, &c.w_output, &c.w_candidate}) *w = random_matrix(hidden, hidden + input, rng);
  for (Vector* b : {&c.b_input, &c.b_forget, &c.b_output, &c.b_candidate}) *b = random_vector(hidden, rng);
  return c;
}

GruCell random_gru(Eigen::Index hidden, Eigen::Index input, std::mt19937_64& rng) {
  GruCell c = zero_gru(hidden, input);
  for (Matrix* w : {&c.w_update, &c.w_reset, &c.w_candidate}) *w = random_matrix(hidden, hidden + input, rng);
  for (Vector* b : {&c.b_update, &c.b_reset, &c.b_candidate}) *b = random_vector(hidden, rng);
  return c;
}

}  // namespace

TEST(Lstm, ZeroParameters) {
  const Matrix c_prev = col({1.0, -2.0});
  const auto step = lstm_cell(col({0.3, 0.7, -1.0}), col({0.4, 0.1}), c_prev, zero_lstm(2, 3));
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(step.cache.input_gate(k, 0), 0.5);
    EXPECT_DOUBLE_EQ(step.cache.forget_gate(k, 0), 0.5);
    EXPECT_DOUBLE_EQ(step.cache.output_gate(k, 0), 0.5);
    EXPECT_DOUBLE_EQ(step.cache.candidate(k, 0), 0.0);
    EXPECT_DOUBLE_EQ(step.c(k, 0), 0.5 * c_prev(k, 0));
    EXPECT_DOUBLE_EQ(step.h(k, 0), 0.5 * std::tanh(0.5 * c_prev(k, 0)));
  }
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
  std::mt19937_64 rng(3);
  LstmCell cell = zero_lstm(2, 2);
  cell.b_forget.setConstant(50.0);
  cell.w_candidate = random_matrix(2, 4, rng);
  const Matrix x = col({0.2, -0.4}), h = col({0.5, 0.1}), c_prev = col({1.25, -0.75});
  const auto step = lstm_cell(x, h, c_prev, cell);
  const Matrix g = (cell.w_candidate * stack(h, x)).array().tanh().matrix();
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(step.c(k, 0), c_prev(k, 0) + 0.5 * g(k, 0), 1e-15);
}

TEST(Lstm, MatchesScalarReference) {
  std::mt19937_64 rng(11);
  constexpr int H = 2, X = 3;
  const LstmCell cell = random_lstm(H, X, rng);
  const Matrix x = random_matrix(X, 1, rng), h_prev = random_matrix(H, 1, rng), c_prev = random_matrix(H, 1, rng);

  // Plain loops over scalars; concatenation order is [h_prev, x].
  double s[H + X];
  for (int j = 0; j < H; ++j) s[j] = h_prev(j, 0);
  for (int j = 0; j < X; ++j) s[H + j] = x(j, 0);
  auto affine = [&](const Matrix& w, const Vector& b, int k) {
    double a = b[k];
    for (int j = 0; j < H + X; ++j) a += w(k, j) * s[j];
    return a;
  };
  const auto step = lstm_cell(x, h_prev, c_prev, cell);
  for (int k = 0; k < H; ++k) {
    const double i = sig(affine(cell.w_input, cell.b_input, k));
    const double f = sig(affine(cell.w_forget, cell.b_forget, k));
    const double o = sig(affine(cell.w_output, cell.b_output, k));
    const double g = std::tanh(affine(cell.w_candidate, cell.b_candidate, k));
    const double c = f * c_prev(k, 0) + i * g;
    const double h = o * std::tanh(c);
    EXPECT_NEAR(step.c(k, 0), c, 1e-12);
    EXPECT_NEAR(step.h(k, 0), h, 1e-12);
  }
}

TEST(Lstm, ShapeMismatchThrows) {
  EXPECT_THROW(lstm_cell(col({1, 2}), col({0, 0}), col({0, 0}), zero_lstm(2, 3)), Error);
  EXPECT_THROW(lstm_cell(col({1, 2, 3}), col({0}), col({0, 0}), zero_lstm(2, 3)), Error);
}

// ---------------------------------------------------------------------------
// GRU

TEST(Gru, ClosedUpdateGateKeepsState) {
  std::mt19937_64 rng(5);
  GruCell cell = random_gru(3, 2, rng);
  cell.w_update.setZero();
  cell.b_update.setConstant(-50.0);
  const Matrix h_prev = col({0.3, -0.8, 0.05});
  const auto step = gru_cell(col({1.0, -1.0}), h_prev, cell);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(step.h(k, 0), h_prev(k, 0));
}

TEST(Gru, OpenUpdateGateTakesCandidate) {
  std::mt19937_64 rng(6);
  GruCell cell = random_gru(3, 2, rng);
  cell.w_update.setZero();
  cell.b_update.setConstant(50.0);
  const auto step = gru_cell(col({1.0, -1.0}), col({0.3, -0.8, 0.05}), cell);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(step.h(k, 0), step.cache.candidate(k, 0));
}

TEST(Gru, ZeroParameters) {
  const Matrix h_prev = col({0.6, -1.2});
  const auto step = gru_cell(col({2.0, 3.0, 4.0}), h_prev, zero_gru(2, 3));
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(step.cache.update_gate(k, 0), 0.5);
    EXPECT_DOUBLE_EQ(step.cache.reset_gate(k, 0), 0.5);
    EXPECT_DOUBLE_EQ(step.cache.candidate(k, 0), 0.0);
    EXPECT_DOUBLE_EQ(step.h(k, 0), 0.5 * h_prev(k, 0));
  }
}

TEST(Gru, MatchesScalarReference) {
  std::mt19937_64 rng(12);
  constexpr int H = 2, X = 3;
  const GruCell cell = random_gru(H, X, rng);
  const Matrix x = random_matrix(X, 1, rng), h_prev = random_matrix(H, 1, rng);
  const auto step = gru_cell(x, h_prev, cell);
  double z[H], r[H];
  for (int k = 0; k < H; ++k) {
    double az = cell.b_update[k], ar = cell.b_reset[k];
    for (int j = 0; j < H; ++j) {
      az += cell.w_update(k, j) * h_prev(j, 0);
      ar += cell.w_reset(k, j) * h_prev(j, 0);
    }
    for (int j = 0; j < X; ++j) {
      az += cell.w_update(k, H + j) * x(j, 0);
      ar += cell.w_reset(k, H + j) * x(j, 0);
    }
    z[k] = sig(az);
    r[k] = sig(ar);
  }
  for (int k = 0; k < H; ++k) {
    double a = cell.b_candidate[k];
    for (int j = 0; j < H; ++j) a += cell.w_candidate(k, j) * r[j] * h_prev(j, 0);
    for (int j = 0; j < X; ++j) a += cell.w_candidate(k, H + j) * x(j, 0);
    const double h = (1.0 - z[k]) * h_prev(k, 0) + z[k] * std::tanh(a);
    EXPECT_NEAR(step.h(k, 0), h, 1e-12);
  }
}

TEST(Gru, ConvexCombinationAndGateRanges) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    GruCell cell = random_gru(5, 4, rng);
    cell.w_candidate *= 0.3;
    const Matrix x = random_matrix(4, 6, rng, 0.3), h_prev = random_matrix(5, 6, rng);
    const auto step = gru_cell(x, h_prev, cell);
    const auto& k = step.cache;
    for (Eigen::Index i = 0; i < step.h.size(); ++i) {
      const double lo = std::min(h_prev.data()[i], k.candidate.data()[i]);
      const double hi = std::max(h_prev.data()[i], k.candidate.data()[i]);
      EXPECT_GE(step.h.data()[i], lo);
      EXPECT_LE(step.h.data()[i], hi);
      EXPECT_GT(k.update_gate.data()[i], 0.0);
      EXPECT_LT(k.update_gate.data()[i], 1.0);
      EXPECT_GT(k.reset_gate.data()[i], 0.0);
      EXPECT_LT(k.reset_gate.data()[i], 1.0);
      EXPECT_GT(k.candidate.data()[i], -1.0);
      EXPECT_LT(k.candidate.data()[i], 1.0);
    }
  }
}

TEST(Lstm, GateRanges) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    LstmCell cell = random_lstm(5, 4, rng);
    cell.w_candidate *= 0.3;
    const auto step = lstm_cell(random_matrix(4, 6, rng, 0.3), random_matrix(5, 6, rng), random_matrix(5, 6, rng), cell);
    const auto& k = step.cache;
    for (const Matrix* gate : {&k.input_gate, &k.forget_gate, &k.output_gate}) {
      EXPECT_GT(gate->minCoeff(), 0.0);
      EXPECT_LT(gate->maxCoeff(), 1.0);
    }
    EXPECT_GT(k.candidate.minCoeff(), -1.0);
    EXPECT_LT(k.candidate.maxCoeff(), 1.0);
  }
}

// ---------------------------------------------------------------------------
// network

class AllKinds : public ::testing::TestWithParam<NetworkKind> {};

INSTANTIATE_TEST_SUITE_P(Nn, AllKinds, ::testing::Values(NetworkKind::ann, NetworkKind::lstm, NetworkKind::gru),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST_P(AllKinds, ZeroInputZeroParametersGiveZero) {
  const Network net(spec_for(GetParam()));
  const std::vector<double> window(net.spec().input_width(), 0.0);
  const Vector out = network_forward(net, window);
  EXPECT_EQ(out.size(), 24);
  EXPECT_TRUE(out.isZero(0.0));
}

TEST_P(AllKinds, WrongWindowWidthThrows) {
  const Network net = Network::glorot(spec_for(GetParam()), 1);
  const std::vector<double> window(23, 0.0);
  EXPECT_THROW(network_forward(net, window), Error);
}

TEST_P(AllKinds, TargetsEqualOutputsGiveZeroGradient) {
  const auto spec = spec_for(GetParam());
  const Network net = randomized_network(spec, 4);
  const auto [x, y] = random_batch(spec, 5, 9);
  const auto res = net.backprop(x, net.forward(x));
  EXPECT_EQ(res.loss, 0.0);
  EXPECT_TRUE(res.gradient.flatten().isZero(0.0));
}

TEST_P(AllKinds, FiniteDifferenceGradientSmallWidths) {
  const auto spec = small_spec(GetParam());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Network net = randomized_network(spec, seed);
    const auto [x, y] = random_batch(spec, 3, 100 + seed);
    const auto check = check_gradients(net, x, y);
    for (const auto& t : check.tensors) EXPECT_LT(t.relative_error, 1e-5) << t.name << " seed " << seed;
  }
}

TEST_P(AllKinds, FiniteDifferenceGradientFullWidths) {
  // One seed at full size here; the acceptance binary sweeps five.
  const auto spec = spec_for(GetParam());
  const Network net = randomized_network(spec, 77);
  const auto [x, y] = random_batch(spec, 1, 78);
  const auto check = check_gradients(net, x, y);
  EXPECT_EQ(check.parameters, net.parameters().size());
  EXPECT_LT(check.max_relative_error, 1e-5);
}

TEST_P(AllKinds, BatchGradientIsMeanOfSingleGradients) {
  const auto spec = small_spec(GetParam());
  const Network net = randomized_network(spec, 8);
  const auto [x, y] = random_batch(spec, 2, 81);
  const Vector both = net.backprop(x, y).gradient.flatten();
  const Vector a = net.backprop(x.col(0), y.col(0)).gradient.flatten();
  const Vector b = net.backprop(x.col(1), y.col(1)).gradient.flatten();
  EXPECT_LT((both - 0.5 * (a + b)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST_P(AllKinds, FlattenRoundTrip) {
  const Network net = randomized_network(spec_for(GetParam()), 3);
  Parameters p = zero_parameters(net.spec());
  p.unflatten(net.parameters().flatten());
  EXPECT_EQ(p, net.parameters());
  EXPECT_THROW(p.unflatten(Vector::Zero(3)), Error);
}

TEST_P(AllKinds, SerializeRoundTrip) {
  auto spec = spec_for(GetParam());
  spec.zero_gru_gate_bias = GetParam() == NetworkKind::gru;
  const Network net = randomized_network(spec, 31);
  std::stringstream blob;
  write_parameters(blob, net);
  const std::string bytes = blob.str();
  EXPECT_EQ(bytes.substr(0, 8), "MHFNET01");
  const Network back = read_parameters(blob);
  EXPECT_EQ(back.spec(), net.spec());
  EXPECT_EQ(back.parameters(), net.parameters());

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_parameters(truncated), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream wrong_magic(bad);
  EXPECT_THROW(read_parameters(wrong_magic), Error);
}

TEST(Network, AnnIsCompositionOfDenseLayers) {
  const Network net = randomized_network(spec_for(NetworkKind::ann), 12);
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(24, 4, rng);
  const auto& d = net.parameters().dense;
  ASSERT_EQ(d.size(), 3u);
  const Matrix manual =
      dense_forward(dense_forward(dense_forward(x, d[0], Activation::relu), d[1], Activation::relu), d[2],
                    Activation::identity);
  EXPECT_LT((net.forward(x) - manual).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(d[0].weight.rows(), 64);
  EXPECT_EQ(d[1].weight.rows(), 36);
  EXPECT_EQ(d[2].weight.rows(), 24);
}

TEST(Network, RecurrentShapes) {
  for (NetworkKind k : {NetworkKind::lstm, NetworkKind::gru}) {
    const Network net = Network::glorot(spec_for(k), 1);
    const auto& d = net.parameters().dense;
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].weight.rows(), 36);
    EXPECT_EQ(d[0].weight.cols(), 8);
    EXPECT_EQ(d[1].weight.rows(), 24);
    EXPECT_EQ(d[1].weight.cols(), 64);
  }
  const Network lstm = Network::glorot(spec_for(NetworkKind::lstm), 1);
  EXPECT_EQ(lstm.parameters().lstm.w_forget.rows(), 64);
  EXPECT_EQ(lstm.parameters().lstm.w_forget.cols(), 100);
}

TEST(Network, RecurrentModelsAreOrderSensitive) {
  for (NetworkKind k : {NetworkKind::lstm, NetworkKind::gru}) {
    const Network net = randomized_network(spec_for(k), 19);
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(24, 1, rng);
    Matrix reversed(24, 1);
    for (int t = 0; t < 3; ++t) reversed.middleRows(8 * (2 - t), 8) = x.middleRows(8 * t, 8);
    EXPECT_GT((net.forward(x) - net.forward(reversed)).cwiseAbs().maxCoeff(), 1e-6) << to_string(k);
  }
}

TEST(Network, GlorotInitIsSeededAndBounded) {
  const auto spec = spec_for(NetworkKind::lstm);
  const Network a = Network::glorot(spec, 5), b = Network::glorot(spec, 5), c = Network::glorot(spec, 6);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_FALSE(a.parameters() == c.parameters());
  a.parameters().for_each_tensor([](const std::string& name, const auto& t) {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vector>) {
      EXPECT_TRUE(t.isZero(0.0)) << name;
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      EXPECT_LE(t.cwiseAbs().maxCoeff(), limit) << name;
    }
  });
}

TEST(Network, ZeroGruGateBiasStaysZero) {
  auto spec = spec_for(NetworkKind::gru);
  spec.zero_gru_gate_bias = true;
  const auto train = windows(4, 2, data::WindowLayout::sequential);
  const auto result = sgd_train(spec, train, train, {.learning_rate = 0.05, .batch_size = 16, .epochs = 2, .seed = 1});
  EXPECT_TRUE(result.model.parameters().gru.b_update.isZero(0.0));
  EXPECT_TRUE(result.model.parameters().gru.b_reset.isZero(0.0));
  EXPECT_FALSE(result.model.parameters().gru.b_candidate.isZero(0.0));
}

TEST(Network, NonFiniteLossThrows) {
  const auto spec = small_spec(NetworkKind::ann);
  Network net = Network::glorot(spec, 1);
  net.parameters().dense[0].weight(0, 0) = std::numeric_limits<double>::infinity();
  auto [x, y] = random_batch(spec, 2, 3);
  try {
    net.backprop(x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite_loss);
  }
}

// ---------------------------------------------------------------------------
// training

TEST_P(AllKinds, ZeroLearningRateLeavesParametersUnchanged) {
  const auto spec = spec_for(GetParam());
  const auto ds = windows(4, 3, layout_for(GetParam()));
  const TrainingConfig cfg{.learning_rate = 0.0, .batch_size = 16, .epochs = 3, .seed = 9};
  const auto result = sgd_train(spec, ds, ds, cfg);
  EXPECT_EQ(result.model.parameters(), initial_network(spec, cfg).parameters());
  ASSERT_EQ(result.curve.validation_mse.size(), 3u);
  EXPECT_EQ(result.curve.validation_mse[0], result.curve.validation_mse[2]);
  for (double t : result.curve.train_mse) EXPECT_NEAR(t, result.curve.validation_mse[0], 1e-12);
}

TEST_P(AllKinds, TrainingIsDeterministic) {
  const auto spec = spec_for(GetParam());
  const auto ds = windows(4, 4, layout_for(GetParam()));
  const TrainingConfig cfg{.learning_rate = 0.01, .batch_size = 8, .epochs = 2, .seed = 17};
  const auto a = sgd_train(spec, ds, ds, cfg);
  const auto b = sgd_train(spec, ds, ds, cfg);
  EXPECT_EQ(a.curve.train_mse, b.curve.train_mse);
  EXPECT_EQ(a.curve.validation_mse, b.curve.validation_mse);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
}

TEST_P(AllKinds, SingleBatchEpochIsOneGradientStep) {
  const auto spec = spec_for(GetParam());
  const auto ds = windows(3, 5, layout_for(GetParam()));
  const TrainingConfig cfg{.learning_rate = 0.05, .batch_size = 10000, .epochs = 1, .seed = 2};
  const auto trained = sgd_train(spec, ds, ds, cfg);

  Network manual = initial_network(spec, cfg);
  const auto step = manual.backprop(input_matrix(ds), target_matrix(ds));
  manual.parameters().axpy(-cfg.learning_rate, step.gradient);
  const Vector diff = trained.model.parameters().flatten() - manual.parameters().flatten();
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(trained.curve.train_mse[0], step.loss, 1e-12);
}

TEST(Training, LinearModelApproachesLeastSquares) {
  // y = 0.5 a - 0.3 b + 0.2, exactly linear, so the least-squares fit has zero residual.
  NetworkSpec spec;
  spec.kind = NetworkKind::ann;
  spec.features = 2;
  spec.lookback = 1;
  spec.horizon = 1;
  spec.ann_hidden = {};
  data::WindowedDataset ds;
  ds.lookback = 1;
  ds.horizon = 1;
  ds.num_features = 2;
  ds.layout = data::WindowLayout::flat;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng);
    ds.inputs.insert(ds.inputs.end(), {a, b});
    ds.targets.push_back(0.5 * a - 0.3 * b + 0.2);
  }
  ds.num_samples = 200;

  Matrix design(200, 3);
  design.leftCols(2) = input_matrix(ds).transpose();
  design.col(2).setOnes();
  const Vector ls = design.colPivHouseholderQr().solve(target_matrix(ds).transpose().col(0));
  EXPECT_NEAR(ls[0], 0.5, 1e-12);
  EXPECT_NEAR(ls[1], -0.3, 1e-12);
  EXPECT_NEAR(ls[2], 0.2, 1e-12);

  const auto result = sgd_train(spec, ds, ds, {.learning_rate = 0.01, .batch_size = 10, .epochs = 200, .seed = 3});
  EXPECT_LT(result.curve.train_mse.back(), 1e-3);
  const auto& layer = result.model.parameters().dense.at(0);
  EXPECT_NEAR(layer.weight(0, 0), ls[0], 0.02);
  EXPECT_NEAR(layer.weight(0, 1), ls[1], 0.02);
  EXPECT_NEAR(layer.bias[0], ls[2], 0.02);
}

TEST(Training, LossDecreasesOnSyntheticWeather) {
  const auto ds = windows(10, 6, data::WindowLayout::flat);
  const auto result = sgd_train(spec_for(NetworkKind::ann), ds, ds,
                                {.learning_rate = 0.01, .batch_size = 16, .epochs = 5, .seed = 1});
  EXPECT_LT(result.curve.train_mse.back(), result.curve.train_mse.front());
  EXPECT_EQ(result.curve.train_mse.size(), 5u);
}

TEST(Training, LayoutMismatchThrows) {
  const auto seq = windows(3, 1, data::WindowLayout::sequential);
  EXPECT_THROW(sgd_train(spec_for(NetworkKind::ann), seq, seq, {}), Error);
  const auto flat = windows(3, 1, data::WindowLayout::flat);
  EXPECT_THROW(sgd_train(spec_for(NetworkKind::gru), flat, flat, {}), Error);
}

TEST(Training, InvalidConfigThrows) {
  const auto ds = windows(3, 1, data::WindowLayout::flat);
  EXPECT_THROW(sgd_train(spec_for(NetworkKind::ann), ds, ds, {.batch_size = 0}), Error);
  EXPECT_THROW(sgd_train(spec_for(NetworkKind::ann), ds, ds, {.epochs = 0}), Error);
  EXPECT_THROW(sgd_train(spec_for(NetworkKind::ann), ds, ds, {.learning_rate = -1.0}), Error);
}

TEST(Training, DivergenceRaisesNonFiniteLoss) {
  const auto ds = windows(3, 1, data::WindowLayout::flat);
  try {
    sgd_train(spec_for(NetworkKind::ann), ds, ds, {.learning_rate = 1e6, .batch_size = 4, .epochs = 20, .seed = 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite_loss);
  }
}

// ---------------------------------------------------------------------------
// prediction

TEST_P(AllKinds, PredictSingleWindowMatchesForward) {
  const Network net = randomized_network(spec_for(GetParam()), 2);
  const auto ds = windows(3, 2, layout_for(GetParam()));
  const Matrix pred = predict_windows(net, ds);
  ASSERT_EQ(pred.rows(), static_cast<Eigen::Index>(ds.num_samples));
  ASSERT_EQ(pred.cols(), 24);
  for (std::size_t i : {std::size_t{0}, ds.num_samples / 2, ds.num_samples - 1}) {
    const Vector one = network_forward(net, ds.input(i));
    EXPECT_LT((pred.row(static_cast<Eigen::Index>(i)).transpose() - one).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST_P(AllKinds, PredictIsPureAndChunkInvariant) {
  const Network net = randomized_network(spec_for(GetParam()), 2);
  std::mt19937_64 rng(8);
  Matrix x = random_matrix(24, 9, rng);
  x.col(4) = x.col(1);
  const Matrix all = predict_windows(net, x);
  EXPECT_EQ(all.row(4), all.row(1));
  const Matrix by_one = predict_windows(net, x, 1);
  const Matrix by_four = predict_windows(net, x, 4);
  EXPECT_LT((all - by_one).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((all - by_four).cwiseAbs().maxCoeff(), 1e-13);
}
