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

#include <functional>
#include <string>
#include <vector>

#include "crispedge/eval.hpp"
#include "crispedge/synth.hpp"
#include "crispedge/train.hpp"

namespace crispedge {

// Loss A/B on a fixed architecture: two networks share data, initial weights
// and batch order, and differ only in the training loss.
struct AbConfig {
  SynthSpec data;             // data.seed is overridden per run
  std::size_t images = 50;
  std::size_t train_images = 40;
  NetworkConfig network;
  TrainConfig train;          // train.loss is overridden per arm
  FusionConfig fusion;
  EvalConfig eval;

  void validate() const {
    data.validate();
    network.validate();
    train.validate();
    fusion.validate();
    eval.validate();
    if (train_images < 1 || train_images >= images)
      throw ConfigError("ab: need 1 <= train_images < images");
    if (data.height != network.height || data.width != network.width)
      throw ConfigError("ab: synthetic canvas must match the network input size");
  }
};

struct AbRow {
  std::string loss;
  double pre_nms_ods = 0.0;
  double post_nms_ods = 0.0;
  double thickness_ratio = 0.0;
  double final_train_loss = 0.0;
};

struct AbResult {
  std::uint64_t seed = 0;
  AbRow weighted;
  AbRow fusion;

  bool fusion_sharper_pre_nms() const { return fusion.pre_nms_ods > weighted.pre_nms_ods; }
  // Fusion's thickness ratio at least `margin` below weighted CE's.
  bool fusion_thinner(double margin = 0.2) const {
    return fusion.thickness_ratio <= (1.0 - margin) * weighted.thickness_ratio;
  }
};

inline AbRow run_arm(const std::string& name, const LossConfig& loss, const AbConfig& cfg,
                     const std::vector<TrainPair>& train_set, const std::vector<Sample>& test_set,
                     std::uint64_t seed, const std::function<void(const std::string&)>& log) {
  NetworkConfig ncfg = cfg.network;
  ncfg.seed = seed;
  Network net = build(ncfg);
  TrainConfig tcfg = cfg.train;
  tcfg.loss = loss;
  tcfg.seed = seed;
  const auto history = train(net, train_set, tcfg, [&](std::size_t epoch, double l) {
    if (log) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s epoch %zu loss %.6g", name.c_str(), epoch + 1, l);
      log(buf);
    }
  });
  std::vector<EdgeMap> preds;
  std::vector<GroundTruth> gts;
  for (const auto& s : test_set) {
    preds.push_back(predict(net, s.image));
    gts.push_back(s.annotation);
  }
  const CrispnessReport c = crispness_report(preds, gts, cfg.eval);
  return {name, c.pre_nms_ods, c.post_nms_ods, c.thickness_ratio, history.back()};
}

inline AbResult run_ab(const AbConfig& cfg, std::uint64_t seed,
                       const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  SynthSpec spec = cfg.data;
  spec.seed = seed;
  // Training sees every simulated annotator; testing scores against the exact boundary.
  std::vector<Sample> train_samples, test_samples;
  for (std::size_t i = 0; i < cfg.train_images; ++i)
    for (auto& s : synth_annotated(spec, i)) train_samples.push_back(std::move(s));
  for (std::size_t i = cfg.train_images; i < cfg.images; ++i) test_samples.push_back(synth_sample(spec, i));
  const auto train_set = to_pairs(train_samples, cfg.network.in_channels);

  AbResult r;
  r.seed = seed;
  r.weighted = run_arm("weighted-ce", {LossKind::kWeightedCe, cfg.fusion}, cfg, train_set, test_samples, seed, log);
  r.fusion = run_arm("fusion", {LossKind::kFusion, cfg.fusion}, cfg, train_set, test_samples, seed, log);
  return r;
}

inline std::string ab_table(const std::vector<AbResult>& results) {
  std::string s = "seed,loss,pre_nms_ods,post_nms_ods,thickness_ratio,final_train_loss\n";
  char buf[192];
  for (const auto& r : results)
    for (const AbRow* row : {&r.weighted, &r.fusion}) {
      std::snprintf(buf, sizeof buf, "%llu,%s,%.6f,%.6f,%.6f,%.6g\n", static_cast<unsigned long long>(r.seed),
                    row->loss.c_str(), row->pre_nms_ods, row->post_nms_ods, row->thickness_ratio,
                    row->final_train_loss);
      s += buf;
    }
  return s;
}

}  // namespace crispedge
