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

#include <cstdint>
#include <string>
#include <vector>

#include "crispedge/tensor.hpp"

namespace crispedge {

// Per-pixel edge probability map.
struct EdgeMap {
  std::size_t h = 0, w = 0;
  std::vector<double> values;

  EdgeMap() = default;
  EdgeMap(std::size_t h, std::size_t w, double fill = 0.0) : h(h), w(w), values(h * w, fill) {}
  EdgeMap(std::size_t h, std::size_t w, std::vector<double> v) : h(h), w(w), values(std::move(v)) {
    if (values.size() != h * w) throw ConfigError("edge map data length does not match dims");
  }

  std::size_t size() const { return values.size(); }
  double& at(std::size_t y, std::size_t x) { return values[y * w + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * w + x]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const EdgeMap&, const EdgeMap&) = default;
};

// Binary boundary annotation.
struct GroundTruth {
  std::size_t h = 0, w = 0;
  std::vector<std::uint8_t> labels;

  GroundTruth() = default;
  GroundTruth(std::size_t h, std::size_t w) : h(h), w(w), labels(h * w, 0) {}
  GroundTruth(std::size_t h, std::size_t w, std::vector<std::uint8_t> l)
      : h(h), w(w), labels(std::move(l)) {
    if (labels.size() != h * w) throw ConfigError("ground truth data length does not match dims");
    for (auto v : labels)
      if (v > 1) throw ConfigError("ground truth must be binary");
  }

  std::size_t size() const { return labels.size(); }
  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * w + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * w + x]; }
  std::uint8_t operator[](std::size_t i) const { return labels[i]; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto v : labels) c += v;
    return c;
  }
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

inline void require_same_dims(const EdgeMap& p, const GroundTruth& g, const char* what) {
  if (p.h != g.h || p.w != g.w)
    throw UsageError(std::string(what) + ": prediction " + std::to_string(p.h) + "x" +
                     std::to_string(p.w) + " vs ground truth " + std::to_string(g.h) + "x" +
                     std::to_string(g.w));
}

inline EdgeMap to_edge_map(const GroundTruth& g) {
  EdgeMap e(g.h, g.w);
  for (std::size_t i = 0; i < g.size(); ++i) e.values[i] = g.labels[i];
  return e;
}

// Batch item n, channel c of a tensor as an edge map.
inline EdgeMap edge_map_from(const Tensor4& t, std::size_t n = 0, std::size_t c = 0) {
  auto p = t.plane(n, c);
  return EdgeMap(t.h(), t.w(), std::vector<double>(p.begin(), p.end()));
}

}  // namespace crispedge
