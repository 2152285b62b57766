// Copyright 2026 The CrispEdge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "crispedge/checkpoint.hpp"
#include "crispedge/model.hpp"
#include "oracles.hpp"

namespace crispedge {
namespace {

NetworkConfig small_config() {
  NetworkConfig cfg;
  cfg.channels = {4, 8, 16};
  cfg.cardinality = 2;
  cfg.height = cfg.width = 16;
  cfg.seed = 5;
  return cfg;
}

std::vector<double> all_params(const Network& net) {
  std::vector<double> out;
  for (const Layer* l : net.layers()) {
    out.insert(out.end(), l->params.weight.values.vec().begin(), l->params.weight.values.vec().end());
    out.insert(out.end(), l->params.bias.values.vec().begin(), l->params.bias.values.vec().end());
  }
  return out;
}

// A square outline as a training target.
TrainPair square_pair(std::size_t side, std::mt19937_64& rng) {
  TrainPair p{oracle::random_tensor({1, 1, side, side}, rng, 0.0, 0.1), GroundTruth(side, side)};
  for (std::size_t y = side / 4; y < 3 * side / 4; ++y)
    for (std::size_t x = side / 4; x < 3 * side / 4; ++x) {
      p.image(0, 0, y, x) += 0.8;
      const bool border = y == side / 4 || x == side / 4 || y == 3 * side / 4 - 1 || x == 3 * side / 4 - 1;
      p.gt.at(y, x) = border ? 1 : 0;
    }
  return p;
}

TEST(NetworkConfig, Validation) {
  NetworkConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.channels = {8, 16};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.channels = {8, 18, 32};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.height = 30;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.stages = 1;
  cfg.channels = {8};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Build, SameSeedSameParameters) {
  EXPECT_EQ(all_params(build(NetworkConfig{})), all_params(build(NetworkConfig{})));
  NetworkConfig other;
  other.seed = 1;
  EXPECT_NE(all_params(build(NetworkConfig{})), all_params(build(other)));
}

TEST(Build, BiasesZeroWeightsScaled) {
  Network net = build(NetworkConfig{});
  for (const Layer* l : net.layers()) {
    for (double b : l->params.bias.values.vec()) EXPECT_EQ(b, 0.0);
    double ss = 0;
    for (double w : l->params.weight.values.vec()) ss += w * w;
    const auto ws = l->spec.weight_shape();
    const double expect_var = 2.0 / double(ws.c * ws.h * ws.w);
    EXPECT_NEAR(ss / double(ws.size()), expect_var, 0.75 * expect_var + 0.05) << l->spec.name;
  }
}

TEST(Build, OutputShapeMatchesInput) {
  Network net = build(NetworkConfig{});
  EXPECT_EQ(net.forward(Tensor4(1, 1, 64, 64, 0.3)).shape(), (Shape4{1, 1, 64, 64}));
  EXPECT_EQ(net.forward(Tensor4(2, 1, 32, 48, 0.3)).shape(), (Shape4{2, 1, 32, 48}));
  EXPECT_THROW(net.forward(Tensor4(1, 1, 30, 32)), UsageError);
  EXPECT_THROW(net.forward(Tensor4(1, 3, 32, 32)), UsageError);
}

TEST(Build, ParameterCountClosedForm) {
  // Independent walk over the layer inventory of the default topology.
  const std::size_t card = 4, in = 1;
  const std::size_t c[3] = {8, 16, 32};
  std::size_t expected = 0;
  std::size_t prev = in;
  for (std::size_t k = 0; k < 3; ++k) {
    expected += prev * c[k] * 9 + c[k];             // conv1
    expected += c[k] * c[k] * 9 + c[k];             // conv2
    expected += c[k] * (c[k] / card) * 9 + c[k];    // grouped side conv
    expected += c[k] * c[k] + c[k];                 // side 1x1
    prev = c[k];
  }
  const std::size_t m[3] = {8, 16, 32};  // mask widths at levels 0..2
  for (std::size_t k = 1; k < 3; ++k) {
    expected += c[k] * m[k] + m[k];                 // side projection
    expected += m[k] * (m[k] / 2) + m[k] / 2;       // halving 1x1
    expected += (m[k] / 2) * 16 + m[k] / 2;         // depthwise 4x4 deconv
  }
  expected += c[0] * m[0] + m[0] + m[0] + 1;        // head
  EXPECT_EQ(build(NetworkConfig{}).param_count(), expected);
  EXPECT_EQ(expected, 25001u);
}

TEST(Forward, ZeroFinalLayerGivesHalf) {
  Network net = build(NetworkConfig{});
  net.head().out.params.weight.values.fill(0.0);
  std::mt19937_64 rng(1);
  EdgeMap p = predict(net, oracle::random_tensor({1, 1, 64, 64}, rng, 0, 1));
  for (double v : p.values) EXPECT_EQ(v, 0.5);
}

TEST(Forward, BatchItemsIndependent) {
  Network net = build(NetworkConfig{});
  std::mt19937_64 rng(2);
  Tensor4 one = oracle::random_tensor({1, 1, 32, 32}, rng, 0, 1);
  Tensor4 two(2, 1, 32, 32);
  std::copy(one.vec().begin(), one.vec().end(), two.vec().begin());
  std::copy(one.vec().begin(), one.vec().end(), two.vec().begin() + 1024);
  Tensor4 out = net.forward(two);
  for (std::size_t i = 0; i < 1024; ++i) EXPECT_EQ(out[i], out[i + 1024]);
  EXPECT_EQ(out.item(0), net.forward(one));
}

TEST(Forward, EndToEndGradientCheck) {
  NetworkConfig cfg = small_config();
  Network net = build(cfg);
  std::mt19937_64 rng(3);
  for (Layer* l : net.layers())
    for (auto& b : l->params.bias.values.vec()) b = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  Tensor4 x = oracle::random_tensor({1, 1, 16, 16}, rng, 0, 1);
  GroundTruth g = square_pair(16, rng).gt;
  const FusionConfig fcfg{1.0, 0.001, 1.0};

  auto loss_of = [&]() {
    return fusion_loss(edge_map_from(sigmoid_forward(net.forward(x))), g, fcfg).value;
  };
  net.zero_grads();
  ForwardCache cache;
  Tensor4 m = net.forward(x, &cache);
  LossResult r = fusion_loss(edge_map_from(sigmoid_forward(m)), g, fcfg);
  Tensor4 dp(m.shape(), r.grad);
  Tensor4 dx = net.backward(cache, sigmoid_backward(m, dp));

  double worst = 0;
  std::size_t checked = 0;
  auto check = [&](double& slot, double analytic) {
    const double fd = oracle::central_difference(loss_of, slot, 1e-5);
    worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-3}));
    ++checked;
  };
  for (Layer* l : net.layers()) {
    for (std::size_t i = 0; i < l->params.weight.values.size(); ++i)
      check(l->params.weight.values[i], l->params.weight.grad[i]);
    for (std::size_t i = 0; i < l->params.bias.values.size(); ++i)
      check(l->params.bias.values[i], l->params.bias.grad[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) check(x[i], dx[i]);
  EXPECT_EQ(checked, net.param_count() + x.size());
  EXPECT_LT(worst, 1e-4);
}

TEST(Train, ZeroLearningRateIsNoOp) {
  Network net = build(small_config());
  std::mt19937_64 rng(4);
  auto before = all_params(net);
  train_step(net, {square_pair(16, rng)}, LossConfig{}, AdamConfig{0.0, 1e-4});
  EXPECT_EQ(all_params(net), before);
}

TEST(Train, ZeroGradientIsNoOp) {
  Network net = build(small_config());
  std::mt19937_64 rng(5);
  auto before = all_params(net);
  TrainPair p = square_pair(16, rng);
  p.gt = GroundTruth(16, 16);  // all-background: weighted CE is identically zero
  const double loss = train_step(net, {p}, LossConfig{LossKind::kWeightedCe, {}}, AdamConfig{1e-3, 0.0});
  EXPECT_EQ(loss, 0.0);
  EXPECT_EQ(all_params(net), before);
}

TEST(Train, EmptyBatchRejected) {
  Network net = build(small_config());
  EXPECT_THROW(train_step(net, {}, LossConfig{}, AdamConfig{}), UsageError);
}

TEST(Train, NonFiniteLossAborts) {
  Network net = build(small_config());
  std::mt19937_64 rng(6);
  TrainPair p = square_pair(16, rng);
  net.head().out.params.bias.values[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train_step(net, {p}, LossConfig{}, AdamConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("pair 0"), std::string::npos);
  }
}

TEST(Train, LossDecreasesAndIsDeterministic) {
  std::mt19937_64 rng(7);
  TrainPair p = square_pair(16, rng);
  auto run = [&]() {
    Network net = build(small_config());
    double first = 0, last = 0;
    for (int i = 0; i < 30; ++i) {
      last = train_step(net, {p}, LossConfig{}, AdamConfig{1e-3, 1e-4});
      if (i == 0) first = last;
    }
    EXPECT_LT(last, first);
    return all_params(net);
  };
  EXPECT_EQ(run(), run());
}

TEST(Multiscale, ConstantNetworkStaysConstant) {
  Network net = build(NetworkConfig{});
  net.head().out.params.weight.values.fill(0.0);
  net.head().out.params.bias.values.fill(0.8);
  std::mt19937_64 rng(8);
  EdgeMap p = multiscale_predict(net, oracle::random_tensor({1, 1, 40, 56}, rng, 0, 1));
  for (double v : p.values) EXPECT_NEAR(v, sigmoid(0.8), 1e-15);
}

TEST(Multiscale, SingleScaleEqualsPredict) {
  Network net = build(NetworkConfig{});
  std::mt19937_64 rng(9);
  Tensor4 img = oracle::random_tensor({1, 1, 32, 32}, rng, 0, 1);
  EXPECT_EQ(multiscale_predict(net, img, {1.0}), predict(net, img));
}

TEST(Multiscale, OutputInsideUnitInterval) {
  Network net = build(NetworkConfig{});
  std::mt19937_64 rng(10);
  EdgeMap p = multiscale_predict(net, oracle::random_tensor({1, 1, 24, 40}, rng, 0, 1));
  EXPECT_EQ(p.h, 24u);
  EXPECT_EQ(p.w, 40u);
  for (double v : p.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Multiscale, TooSmallImageRejected) {
  Network net = build(NetworkConfig{});
  EXPECT_THROW(multiscale_predict(net, Tensor4(1, 1, 2, 2, 0.5)), UsageError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  NetworkConfig cfg;
  cfg.seed = 77;
  Network net = build(cfg);
  auto bytes = save_checkpoint(net);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "CRSPEDGE");
  Network back = load_checkpoint(bytes);
  EXPECT_EQ(back.config(), cfg);
  EXPECT_EQ(all_params(back), all_params(net));
  std::mt19937_64 rng(11);
  Tensor4 x = oracle::random_tensor({1, 1, 32, 32}, rng, 0, 1);
  EXPECT_EQ(back.forward(x), net.forward(x));
  EXPECT_EQ(save_checkpoint(back), bytes);
}

TEST(Checkpoint, TruncationRejected) {
  auto bytes = save_checkpoint(build(small_config()));
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(load_checkpoint(t), CorruptCheckpoint) << cut;
  }
}

TEST(Checkpoint, FlippedByteFailsChecksum) {
  auto bytes = save_checkpoint(build(small_config()));
  bytes[bytes.size() / 2] ^= 0x40;
  try {
    load_checkpoint(bytes);
    FAIL() << "expected CorruptCheckpoint";
  } catch (const CorruptCheckpoint& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
}

TEST(Checkpoint, BadMagicAndVersion) {
  auto bytes = save_checkpoint(build(small_config()));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(load_checkpoint(bad), CorruptCheckpoint);
  bad = bytes;
  bad[8] = 2;
  EXPECT_THROW(load_checkpoint(bad), CorruptCheckpoint);
}

}  // namespace
}  // namespace crispedge
