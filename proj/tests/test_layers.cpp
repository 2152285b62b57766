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

#include "crispedge/gradcheck.hpp"
#include "crispedge/layers.hpp"
#include "oracles.hpp"

namespace crispedge {
namespace {

LayerParams make_params(const LayerSpec& spec, std::mt19937_64& rng) {
  LayerParams p(spec);
  p.weight.values = oracle::random_tensor(spec.weight_shape(), rng);
  p.bias.values = oracle::random_tensor(spec.bias_shape(), rng);
  return p;
}

TEST(Conv, OneByOneKernelScales) {
  auto spec = LayerSpec::conv("c", 1, 1, 1);
  LayerParams p(spec);
  p.weight.values[0] = 2.0;
  Tensor4 out = conv_forward(Tensor4(1, 1, 3, 3, 1.0), p, spec);
  EXPECT_EQ(out, Tensor4(1, 1, 3, 3, 2.0));
}

TEST(Conv, ZeroKernelGivesZeros) {
  auto spec = LayerSpec::conv("c", 1, 1, 3);
  LayerParams p(spec);
  Tensor4 in(1, 1, 5, 5, 0.7);
  Tensor4 out = conv_forward(in, p, spec);
  EXPECT_EQ(out, Tensor4(1, 1, 3, 3, 0.0));
}

TEST(Conv, MatchesNaiveOracle) {
  std::mt19937_64 rng(11);
  struct Case { std::size_t stride, pad, groups; };
  for (Case cs : {Case{1, 0, 1}, Case{1, 1, 1}, Case{2, 1, 1}, Case{1, 1, 2}, Case{2, 0, 4}}) {
    auto spec = LayerSpec::conv("c", 4, 4, 3, cs.stride, cs.pad, cs.groups);
    auto p = make_params(spec, rng);
    Tensor4 in = oracle::random_tensor({2, 4, 8, 8}, rng);
    Tensor4 got = conv_forward(in, p, spec);
    Tensor4 want = oracle::naive_conv(in, p.weight.values, p.bias.values, cs.stride, cs.pad, cs.groups);
    EXPECT_LT(oracle::max_relative_error(got, want), 1e-12) << "stride " << cs.stride << " pad " << cs.pad;
  }
}

TEST(Conv, ChannelMismatchNamesLayer) {
  auto spec = LayerSpec::conv("enc0.conv1", 3, 4, 3);
  LayerParams p(spec);
  try {
    conv_forward(Tensor4(1, 2, 5, 5), p, spec);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("enc0.conv1"), std::string::npos);
  }
}

TEST(Conv, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(3);
  auto spec = LayerSpec::conv("c", 2, 3, 3, 1, 1);
  auto p = make_params(spec, rng);
  Tensor4 in = oracle::random_tensor({1, 2, 5, 5}, rng);
  Tensor4 gin = conv_backward(in, Tensor4(1, 3, 5, 5), p, spec);
  EXPECT_EQ(gin, Tensor4(in.shape()));
  EXPECT_EQ(p.weight.grad, Tensor4(spec.weight_shape()));
  EXPECT_EQ(p.bias.grad, Tensor4(spec.bias_shape()));
}

TEST(Conv, BackwardAccumulates) {
  std::mt19937_64 rng(4);
  auto spec = LayerSpec::conv("c", 2, 3, 3, 1, 1);
  auto p = make_params(spec, rng);
  Tensor4 in = oracle::random_tensor({1, 2, 5, 5}, rng);
  Tensor4 up = oracle::random_tensor({1, 3, 5, 5}, rng);
  conv_backward(in, up, p, spec);
  Tensor4 once = p.weight.grad;
  conv_backward(in, up, p, spec);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(p.weight.grad[i], 2.0 * once[i]);
  p.zero_grad();
  EXPECT_EQ(p.weight.grad, Tensor4(spec.weight_shape()));
}

TEST(Conv, UpstreamShapeMismatch) {
  auto spec = LayerSpec::conv("c", 1, 1, 3);
  LayerParams p(spec);
  EXPECT_THROW(conv_backward(Tensor4(1, 1, 5, 5), Tensor4(1, 1, 5, 5), p, spec), ConfigError);
}

TEST(Conv, Linearity) {
  std::mt19937_64 rng(5);
  auto spec = LayerSpec::conv("c", 3, 2, 3, 1, 1);
  auto p = make_params(spec, rng);
  p.bias.values.fill(0.0);
  Tensor4 x = oracle::random_tensor({1, 3, 6, 6}, rng);
  Tensor4 y = oracle::random_tensor({1, 3, 6, 6}, rng);
  const double a = 0.7, b = -1.3;
  Tensor4 mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  Tensor4 lhs = conv_forward(mix, p, spec);
  Tensor4 fx = conv_forward(x, p, spec), fy = conv_forward(y, p, spec);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], a * fx[i] + b * fy[i], 1e-12);
}

TEST(Conv, Deterministic) {
  std::mt19937_64 rng(6);
  auto spec = LayerSpec::conv("c", 2, 4, 3, 1, 1, 2);
  auto p = make_params(spec, rng);
  Tensor4 x = oracle::random_tensor({2, 2, 7, 7}, rng);
  EXPECT_EQ(conv_forward(x, p, spec), conv_forward(x, p, spec));
}

TEST(Deconv, DoublesResolution) {
  auto spec = LayerSpec::deconv("d", 2);
  LayerParams p(spec);
  EXPECT_EQ(grouped_deconv_forward(Tensor4(1, 2, 4, 4), p, spec).shape(), (Shape4{1, 2, 8, 8}));
}

TEST(Deconv, GroupsMustDivideChannels) {
  LayerSpec spec{LayerKind::kGroupedDeconv, 4, 4, 2, 1, 3, 4, 4, "bad"};
  EXPECT_THROW(spec.validate(), ConfigError);
  LayerParams p;
  EXPECT_THROW(grouped_deconv_forward(Tensor4(1, 4, 2, 2), p, spec), ConfigError);
}

TEST(Deconv, ZeroKernelZeroesOnlyItsChannel) {
  std::mt19937_64 rng(7);
  auto spec = LayerSpec::deconv("d", 3);
  auto p = make_params(spec, rng);
  p.bias.values.fill(0.0);
  Tensor4 in = oracle::random_tensor({1, 3, 4, 4}, rng);
  Tensor4 before = grouped_deconv_forward(in, p, spec);
  for (std::size_t ky = 0; ky < 4; ++ky)
    for (std::size_t kx = 0; kx < 4; ++kx) p.weight.values(1, 0, ky, kx) = 0.0;
  Tensor4 after = grouped_deconv_forward(in, p, spec);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 64; ++i) {
      if (c == 1)
        EXPECT_EQ(after.plane(0, c)[i], 0.0);
      else
        EXPECT_EQ(after.plane(0, c)[i], before.plane(0, c)[i]);
    }
}

TEST(Deconv, MatchesNaiveOracle) {
  std::mt19937_64 rng(8);
  for (std::size_t groups : {1, 2, 4}) {
    LayerSpec spec{LayerKind::kGroupedDeconv, 4, 4, 2, 1, groups, 4, 4, "d"};
    auto p = make_params(spec, rng);
    Tensor4 in = oracle::random_tensor({2, 4, 5, 3}, rng);
    Tensor4 got = grouped_deconv_forward(in, p, spec);
    Tensor4 want = oracle::naive_deconv(in, p.weight.values, p.bias.values, 2, 1, groups);
    EXPECT_LT(oracle::max_relative_error(got, want), 1e-10) << "groups " << groups;
  }
  // non-default geometry: kernel 3, stride 1, no pad
  LayerSpec spec{LayerKind::kGroupedDeconv, 3, 3, 1, 0, 2, 2, 2, "d"};
  auto p = make_params(spec, rng);
  Tensor4 in = oracle::random_tensor({1, 2, 4, 4}, rng);
  EXPECT_LT(oracle::max_relative_error(grouped_deconv_forward(in, p, spec),
                                       oracle::naive_deconv(in, p.weight.values, p.bias.values, 1, 0, 2)),
            1e-10);
}

TEST(Deconv, NeverMixesChannels) {
  std::mt19937_64 rng(9);
  auto spec = LayerSpec::deconv("d", 4);
  auto p = make_params(spec, rng);
  Tensor4 in = oracle::random_tensor({1, 4, 3, 3}, rng);
  Tensor4 base = grouped_deconv_forward(in, p, spec);
  for (std::size_t i = 0; i < 4; ++i) {
    Tensor4 bumped = in;
    for (auto& v : bumped.plane(0, i)) v += 0.5;
    Tensor4 out = grouped_deconv_forward(bumped, p, spec);
    for (std::size_t c = 0; c < 4; ++c) {
      bool changed = false;
      for (std::size_t k = 0; k < 36; ++k) changed |= out.plane(0, c)[k] != base.plane(0, c)[k];
      EXPECT_EQ(changed, c == i) << "perturbed " << i << " observed " << c;
    }
  }
}

TEST(Pointwise, SigmoidOfZeroIsHalf) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(100.0), 1.0 - kProbClamp);
  EXPECT_EQ(sigmoid(-100.0), kProbClamp);
}

TEST(Pointwise, ReluBackwardBlocksNegatives) {
  Tensor4 in(1, 1, 1, 3, std::vector<double>{-1.0, 0.5, -0.1});
  Tensor4 up(1, 1, 1, 3, std::vector<double>{4.0, 5.0, 6.0});
  Tensor4 g = relu_backward(in, up);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 5.0);
  EXPECT_EQ(g[2], 0.0);
}

TEST(Pointwise, MaxPoolRoutesToArgmax) {
  Tensor4 in(1, 1, 2, 2, std::vector<double>{1, 3, 2, 0});
  EXPECT_EQ(maxpool2_forward(in)[0], 3.0);
  Tensor4 g = maxpool2_backward(in, Tensor4(1, 1, 1, 1, 2.5));
  EXPECT_EQ(g, Tensor4(1, 1, 2, 2, std::vector<double>{0, 2.5, 0, 0}));
}

TEST(Pointwise, MaxPoolTieGoesToFirst) {
  Tensor4 in(1, 1, 2, 2, std::vector<double>{1, 2, 2, 2});
  Tensor4 g = maxpool2_backward(in, Tensor4(1, 1, 1, 1, 1.0));
  EXPECT_EQ(g, Tensor4(1, 1, 2, 2, std::vector<double>{0, 1, 0, 0}));
}

TEST(Pointwise, MaxPoolRejectsOddDims) {
  EXPECT_THROW(maxpool2_forward(Tensor4(1, 1, 3, 4)), ConfigError);
}

TEST(Pointwise, SumBackwardCopies) {
  Tensor4 up(1, 1, 2, 2, 1.5);
  auto [a, b] = sum_backward(up);
  EXPECT_EQ(a, up);
  EXPECT_EQ(b, up);
}

TEST(GradCheck, EveryLayerKind) {
  const std::vector<LayerSpec> specs = {
      LayerSpec::conv("conv", 3, 4, 3, 1, 1),
      LayerSpec::conv("gconv", 4, 4, 3, 1, 1, 2),
      LayerSpec::conv("strided", 2, 2, 3, 2, 1),
      LayerSpec::deconv("deconv", 3),
      LayerSpec::simple(LayerKind::kMaxPool2, 2),
      LayerSpec::simple(LayerKind::kRelu, 2),
      LayerSpec::simple(LayerKind::kSigmoid, 2),
      LayerSpec::simple(LayerKind::kSum, 2),
  };
  for (const auto& s : specs) {
    GradCheckOptions opt;
    opt.seed = 21;
    auto r = grad_check(s, 1e-4, opt);
    EXPECT_TRUE(r.passed) << s.label() << " max rel " << r.max_rel_error;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(GradCheck, LinearLayersNearExact) {
  for (const auto& s : {LayerSpec::conv("conv", 2, 3, 3, 1, 1), LayerSpec::deconv("deconv", 2),
                        LayerSpec::simple(LayerKind::kSum, 2)}) {
    auto r = grad_check(s, 1e-8);
    EXPECT_TRUE(r.passed) << s.label() << " max rel " << r.max_rel_error;
  }
}

TEST(GradCheck, ReluKinkExcluded) {
  GradCheckOptions opt;
  auto away = grad_check(LayerSpec::simple(LayerKind::kRelu, 1), 1e-4, opt);
  EXPECT_TRUE(away.passed);
  EXPECT_EQ(away.excluded, 0u);
  opt.plant_zero = true;
  auto at_zero = grad_check(LayerSpec::simple(LayerKind::kRelu, 1), 1e-4, opt);
  EXPECT_TRUE(at_zero.passed);
  EXPECT_EQ(at_zero.excluded, 1u);
}

}  // namespace
}  // namespace crispedge
