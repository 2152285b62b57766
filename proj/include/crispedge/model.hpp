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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crispedge/imageops.hpp"
#include "crispedge/layers.hpp"
#include "crispedge/loss.hpp"
#include "crispedge/maps.hpp"

namespace crispedge {

struct NetworkConfig {
  std::size_t stages = 3;
  std::vector<std::size_t> channels{8, 16, 32};
  std::size_t cardinality = 4;
  std::size_t in_channels = 1;
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 0;

  std::size_t divisor() const { return std::size_t{1} << (stages - 1); }

  void validate() const {
    if (stages < 2) throw ConfigError("stages must be >= 2");
    if (channels.size() != stages)
      throw ConfigError("channels: expected " + std::to_string(stages) + " entries, got " +
                        std::to_string(channels.size()));
    if (cardinality == 0) throw ConfigError("cardinality must be >= 1");
    if (in_channels == 0) throw ConfigError("in_channels must be >= 1");
    for (std::size_t c : channels)
      if (c == 0 || c % cardinality != 0)
        throw ConfigError("channels: " + std::to_string(c) + " is not divisible by cardinality " +
                          std::to_string(cardinality));
    if (channels.back() % divisor() != 0)
      throw ConfigError("channels: deepest stage width " + std::to_string(channels.back()) +
                        " must be divisible by 2^(stages-1) = " + std::to_string(divisor()));
    if (height == 0 || width == 0 || height % divisor() != 0 || width % divisor() != 0)
      throw ConfigError("height/width must be positive multiples of " + std::to_string(divisor()));
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct Layer {
  LayerSpec spec;
  LayerParams params;

  Layer() = default;
  explicit Layer(LayerSpec s) : spec(std::move(s)), params(spec) {}

  Tensor4 forward(const Tensor4& x) const {
    return spec.kind == LayerKind::kGroupedDeconv ? grouped_deconv_forward(x, params, spec)
                                                  : conv_forward(x, params, spec);
  }
  Tensor4 backward(const Tensor4& x, const Tensor4& up) {
    return spec.kind == LayerKind::kGroupedDeconv ? grouped_deconv_backward(x, up, params, spec)
                                                  : conv_backward(x, up, params, spec);
  }
};

// Two 3x3 convs plus a side block: grouped 3x3 conv, relu, 1x1 conv, identity skip.
struct EncoderStage {
  Layer conv1, conv2, side_gconv, side_proj;
};

// Side feature -> 1x1 conv to the mask width, summed into the mask encoding,
// 1x1 conv halving channels, relu, grouped deconv doubling resolution.
struct RefinementModule {
  Layer side, reduce, deconv;
};

struct Head {
  Layer side, out;
};

// Activations kept by a forward pass for the backward pass.
struct ForwardCache {
  struct Stage {
    Tensor4 input;  // after pooling
    Tensor4 z1, r1, z2, feature, zg, rg, side;
  };
  struct Refine {
    Tensor4 fused, zr, rr;
  };
  std::vector<Stage> stages;
  std::vector<Refine> refine;  // refine[k-1] for level k
  Tensor4 head_fused;
};

class Network {
 public:
  Network() = default;

  // Builds the topology with zeroed parameters; see build() for initialisation.
  explicit Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t S = cfg_.stages;
    stages_.resize(S);
    for (std::size_t k = 0; k < S; ++k) {
      const std::size_t in = k == 0 ? cfg_.in_channels : cfg_.channels[k - 1];
      const std::size_t c = cfg_.channels[k];
      const std::string p = "enc" + std::to_string(k);
      stages_[k].conv1 = Layer(LayerSpec::conv(p + ".conv1", in, c, 3, 1, 1));
      stages_[k].conv2 = Layer(LayerSpec::conv(p + ".conv2", c, c, 3, 1, 1));
      stages_[k].side_gconv =
          Layer(LayerSpec::conv("side" + std::to_string(k) + ".gconv", c, c, 3, 1, 1,
                                cfg_.cardinality));
      stages_[k].side_proj = Layer(LayerSpec::conv("side" + std::to_string(k) + ".proj", c, c, 1));
    }
    refine_.resize(S - 1);
    for (std::size_t k = S - 1; k >= 1; --k) {
      const std::size_t m = mask_channels(k);
      const std::string p = "ref" + std::to_string(k);
      auto& r = refine_[k - 1];
      r.side = Layer(LayerSpec::conv(p + ".side", cfg_.channels[k], m, 1));
      r.reduce = Layer(LayerSpec::conv(p + ".reduce", m, m / 2, 1));
      r.deconv = Layer(LayerSpec::deconv(p + ".deconv", m / 2));
    }
    const std::size_t m0 = mask_channels(0);
    head_.side = Layer(LayerSpec::conv("head.side", cfg_.channels[0], m0, 1));
    head_.out = Layer(LayerSpec::conv("head.out", m0, 1, 1));
  }

  const NetworkConfig& config() const { return cfg_; }

  // Mask-encoding width entering level k.
  std::size_t mask_channels(std::size_t k) const {
    return cfg_.channels.back() >> (cfg_.stages - 1 - k);
  }

  // Canonical parameter order: checkpoints, optimiser and counting walk this.
  std::vector<Layer*> layers() {
    std::vector<Layer*> out;
    for (auto& s : stages_)
      for (Layer* l : {&s.conv1, &s.conv2, &s.side_gconv, &s.side_proj}) out.push_back(l);
    for (std::size_t k = cfg_.stages - 1; k >= 1; --k) {
      auto& r = refine_[k - 1];
      for (Layer* l : {&r.side, &r.reduce, &r.deconv}) out.push_back(l);
    }
    out.push_back(&head_.side);
    out.push_back(&head_.out);
    return out;
  }
  std::vector<const Layer*> layers() const {
    auto v = const_cast<Network*>(this)->layers();
    return {v.begin(), v.end()};
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const Layer* l : layers()) n += l->spec.param_count();
    return n;
  }

  void zero_grads() {
    for (Layer* l : layers()) l->params.zero_grad();
  }

  Head& head() { return head_; }

  // Activation map M (n x 1 x h x w). Spatial dims must be multiples of 2^(stages-1).
  Tensor4 forward(const Tensor4& x, ForwardCache* cache = nullptr) const {
    const std::size_t S = cfg_.stages;
    if (x.c() != cfg_.in_channels)
      throw UsageError("forward: expected " + std::to_string(cfg_.in_channels) +
                       " input channels, got " + std::to_string(x.c()));
    if (x.h() == 0 || x.w() == 0 || x.h() % cfg_.divisor() != 0 || x.w() % cfg_.divisor() != 0)
      throw UsageError("forward: input " + x.shape().str() + " spatial dims must be multiples of " +
                       std::to_string(cfg_.divisor()));
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.stages.assign(S, {});
    c.refine.assign(S - 1, {});

    for (std::size_t k = 0; k < S; ++k) {
      auto& st = c.stages[k];
      const auto& L = stages_[k];
      st.input = k == 0 ? x : maxpool2_forward(c.stages[k - 1].feature);
      st.z1 = L.conv1.forward(st.input);
      st.r1 = relu_forward(st.z1);
      st.z2 = L.conv2.forward(st.r1);
      st.feature = relu_forward(st.z2);
      st.zg = L.side_gconv.forward(st.feature);
      st.rg = relu_forward(st.zg);
      st.side = sum_forward(st.feature, L.side_proj.forward(st.rg));
    }

    Tensor4 mask = c.stages[S - 1].feature;
    for (std::size_t k = S - 1; k >= 1; --k) {
      auto& rc = c.refine[k - 1];
      const auto& R = refine_[k - 1];
      rc.fused = sum_forward(mask, R.side.forward(c.stages[k].side));
      rc.zr = R.reduce.forward(rc.fused);
      rc.rr = relu_forward(rc.zr);
      mask = R.deconv.forward(rc.rr);
    }
    c.head_fused = sum_forward(mask, head_.side.forward(c.stages[0].side));
    return head_.out.forward(c.head_fused);
  }

  // Accumulates parameter gradients for d(loss)/dM = upstream; returns d/dx.
  Tensor4 backward(const ForwardCache& c, const Tensor4& upstream) {
    const std::size_t S = cfg_.stages;
    std::vector<Tensor4> d_feature(S), d_side(S);
    for (std::size_t k = 0; k < S; ++k) {
      d_feature[k] = Tensor4(c.stages[k].feature.shape());
      d_side[k] = Tensor4(c.stages[k].side.shape());
    }

    Tensor4 d_fused = head_.out.backward(c.head_fused, upstream);
    d_side[0] += head_.side.backward(c.stages[0].side, d_fused);
    Tensor4 d_mask = std::move(d_fused);
    for (std::size_t k = 1; k < S; ++k) {
      auto& R = refine_[k - 1];
      const auto& rc = c.refine[k - 1];
      Tensor4 d_rr = R.deconv.backward(rc.rr, d_mask);
      Tensor4 d_zr = relu_backward(rc.zr, d_rr);
      Tensor4 d_f = R.reduce.backward(rc.fused, d_zr);
      d_side[k] += R.side.backward(c.stages[k].side, d_f);
      d_mask = std::move(d_f);
    }
    d_feature[S - 1] += d_mask;

    Tensor4 d_input;
    for (std::size_t k = S; k-- > 0;) {
      auto& L = stages_[k];
      const auto& st = c.stages[k];
      d_feature[k] += d_side[k];
      Tensor4 d_rg = L.side_proj.backward(st.rg, d_side[k]);
      d_feature[k] += L.side_gconv.backward(st.feature, relu_backward(st.zg, d_rg));
      Tensor4 d_r1 = L.conv2.backward(st.r1, relu_backward(st.z2, d_feature[k]));
      d_input = L.conv1.backward(st.input, relu_backward(st.z1, d_r1));
      if (k > 0) d_feature[k - 1] += maxpool2_backward(c.stages[k - 1].feature, d_input);
    }
    return d_input;
  }

 private:
  NetworkConfig cfg_;
  std::vector<EncoderStage> stages_;
  std::vector<RefinementModule> refine_;
  Head head_;
};

// Deterministic He-normal initialisation from config.seed.
inline Network build(const NetworkConfig& cfg) {
  Network net(cfg);
  std::mt19937_64 rng(cfg.seed);
  for (Layer* l : net.layers()) init_params(l->params, l->spec, rng);
  return net;
}

inline EdgeMap predict(const Network& net, const Tensor4& image) {
  Tensor4 m = net.forward(image);
  return edge_map_from(sigmoid_forward(m));
}

// Averages predictions over resized copies of the image (dims rounded to the
// network divisor) after resizing each back to the original size.
inline EdgeMap multiscale_predict(const Network& net, const Tensor4& image,
                                  const std::vector<double>& scales = {0.5, 1.0, 1.5}) {
  if (image.n() != 1) throw UsageError("multiscale_predict: expects a single image");
  if (scales.empty()) throw UsageError("multiscale_predict: empty scale set");
  const std::size_t d = net.config().divisor();
  const std::size_t h = image.h(), w = image.w();
  EdgeMap acc(h, w, 0.0);
  for (double s : scales) {
    auto round_to = [&](std::size_t v) {
      return static_cast<std::size_t>(std::lround(static_cast<double>(v) * s / static_cast<double>(d))) * d;
    };
    const std::size_t sh = round_to(h), sw = round_to(w);
    if (sh == 0 || sw == 0)
      throw UsageError("multiscale_predict: image " + std::to_string(h) + "x" + std::to_string(w) +
                       " too small for scale " + std::to_string(s));
    Tensor4 scaled(1, image.c(), sh, sw);
    for (std::size_t c = 0; c < image.c(); ++c) {
      auto r = resize_bilinear(image.plane(0, c), h, w, sh, sw);
      std::copy(r.begin(), r.end(), scaled.plane(0, c).begin());
    }
    EdgeMap p = predict(net, scaled);
    auto back = resize_bilinear(p.values, sh, sw, h, w);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += back[i];
  }
  for (auto& v : acc.values) v /= static_cast<double>(scales.size());
  return acc;
}

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One ADAM update with L2 weight decay folded into the gradient.
inline void adam_update(ParamTensor& p, const AdamConfig& cfg) {
  ++p.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double g = p.grad[i] + cfg.weight_decay * p.values[i];
    p.m1[i] = cfg.beta1 * p.m1[i] + (1.0 - cfg.beta1) * g;
    p.m2[i] = cfg.beta2 * p.m2[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = p.m1[i] / c1;
    const double vhat = p.m2[i] / c2;
    p.values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

struct TrainPair {
  Tensor4 image;  // 1 x C x H x W
  GroundTruth gt;
};

namespace detail {

inline std::string nonfinite_term(const EdgeMap& p, const GroundTruth& g, const LossConfig& cfg) {
  if (cfg.kind == LossKind::kFusion) {
    if (!std::isfinite(dice_loss(p, g, cfg.fusion.epsilon).value)) return "dice";
    if (!std::isfinite(ce_term(p, g, cfg.fusion.ce).value)) return "cross-entropy";
  }
  for (double v : p.values)
    if (!std::isfinite(v)) return "prediction";
  return to_string(cfg.kind);
}

}  // namespace detail

// zero grads -> forward -> summed batch loss -> backward -> ADAM. Returns the
// pre-update loss.
inline double train_step(Network& net, const std::vector<TrainPair>& batch, const LossConfig& loss,
                         const AdamConfig& opt) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  net.zero_grads();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    ForwardCache cache;
    Tensor4 m = net.forward(pair.image, &cache);
    EdgeMap p = edge_map_from(sigmoid_forward(m));
    LossResult r = loss(p, pair.gt);
    if (!std::isfinite(r.value))
      throw NumericError("non-finite loss at batch pair " + std::to_string(i) + ", term '" +
                         detail::nonfinite_term(p, pair.gt, loss) + "'");
    total += r.value;
    Tensor4 dp(m.shape());
    std::copy(r.grad.begin(), r.grad.end(), dp.vec().begin());
    net.backward(cache, sigmoid_backward(m, dp));
  }
  for (Layer* l : net.layers()) {
    adam_update(l->params.weight, opt);
    adam_update(l->params.bias, opt);
  }
  return total;
}

}  // namespace crispedge
