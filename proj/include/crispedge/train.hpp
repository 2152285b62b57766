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

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "crispedge/dataset.hpp"
#include "crispedge/model.hpp"

namespace crispedge {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 4;
  LossConfig loss;
  AdamConfig adam;
  std::uint64_t seed = 0;  // shuffling order

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (adam.weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    loss.fusion.validate();
  }
};

inline std::vector<TrainPair> to_pairs(const std::vector<Sample>& samples, std::size_t in_channels) {
  std::vector<TrainPair> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    s.validate();
    if (s.image.c() != in_channels)
      throw UsageError("sample '" + s.id + "' has " + std::to_string(s.image.c()) + " channels, network expects " +
                       std::to_string(in_channels));
    out.push_back({s.image, s.annotation});
  }
  return out;
}

// Mean per-sample loss of each epoch, measured before each step's update.
// `on_epoch(epoch, mean_loss)` may be empty.
inline std::vector<double> train(Network& net, const std::vector<TrainPair>& data, const TrainConfig& cfg,
                                 const std::function<void(std::size_t, double)>& on_epoch = {}) {
  cfg.validate();
  if (data.empty()) throw UsageError("train: empty training set");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<TrainPair> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(data[order[i]]);
      total += train_step(net, batch, cfg.loss, cfg.adam);
    }
    history.push_back(total / static_cast<double>(data.size()));
    if (on_epoch) on_epoch(epoch, history.back());
  }
  return history;
}

}  // namespace crispedge
