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
#include <cmath>
#include <numbers>
#include <vector>

#include "crispedge/imageops.hpp"
#include "crispedge/maps.hpp"

namespace crispedge {

struct NmsConfig {
  double sigma = 1.5;
  std::size_t radius = 4;
  double slack = 0.99;  // kept iff value >= slack * each neighbour along the normal
  std::size_t max_passes = 64;
};

inline std::vector<double> gaussian_smooth(const EdgeMap& p, double sigma, std::size_t radius) {
  return gaussian_blur(p.values, p.h, p.w, sigma, radius);
}

// Edge-normal angle per pixel from the smoothed map's second derivatives
// (the gradient of its gradient): the direction of strongest negative
// curvature, which points across a ridge.
inline std::vector<double> edge_normals(const std::vector<double>& s, std::size_t h, std::size_t w) {
  auto d = [&](const std::vector<double>& f, bool along_x) {
    std::vector<double> g(f.size());
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        if (along_x) {
          const std::size_t l = x > 0 ? x - 1 : 0, r = std::min(x + 1, w - 1);
          g[y * w + x] = (f[y * w + r] - f[y * w + l]) / static_cast<double>(std::max<std::size_t>(r - l, 1));
        } else {
          const std::size_t u = y > 0 ? y - 1 : 0, b = std::min(y + 1, h - 1);
          g[y * w + x] = (f[b * w + x] - f[u * w + x]) / static_cast<double>(std::max<std::size_t>(b - u, 1));
        }
      }
    return g;
  };
  const auto gx = d(s, true), gy = d(s, false);
  const auto gxx = d(gx, true), gxy = d(gx, false), gyy = d(gy, false);
  std::vector<double> theta(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    theta[i] = 0.5 * std::atan2(2.0 * gxy[i], gxx[i] - gyy[i]) + std::numbers::pi / 2.0;
  return theta;
}

namespace detail {

// One suppression pass. Neighbour values are bilinear at +-1 px along the
// normal. A near-tie with a neighbour whose own normal is roughly parallel
// means both sit across the same band; the smoothed map then decides, and
// the pixel survives only if it is not below that neighbour there. Ties with
// a differently oriented neighbour (a corner, a junction) do not suppress.
inline EdgeMap nms_pass(const EdgeMap& p, const NmsConfig& cfg) {
  const auto smooth = gaussian_smooth(p, cfg.sigma, cfg.radius);
  const auto theta = edge_normals(smooth, p.h, p.w);
  EdgeMap out = p;
  for (std::size_t y = 0; y < p.h; ++y)
    for (std::size_t x = 0; x < p.w; ++x) {
      const std::size_t i = y * p.w + x;
      const double v = p.values[i];
      if (v <= 0.0) continue;
      const double dx = std::cos(theta[i]), dy = std::sin(theta[i]);
      bool keep = true;
      for (double sgn : {1.0, -1.0}) {
        const double ny = static_cast<double>(y) + sgn * dy, nx = static_cast<double>(x) + sgn * dx;
        const double nb = sample_bilinear(p.values, p.h, p.w, ny, nx);
        if (v < cfg.slack * nb) {
          keep = false;
        } else if (cfg.slack * v < nb) {
          const auto qy = static_cast<std::size_t>(std::clamp(std::lround(ny), 0L, static_cast<long>(p.h) - 1));
          const auto qx = static_cast<std::size_t>(std::clamp(std::lround(nx), 0L, static_cast<long>(p.w) - 1));
          const bool parallel = std::abs(std::cos(theta[i] - theta[qy * p.w + qx])) >= std::numbers::sqrt2 / 2.0;
          if (parallel && smooth[i] < sample_bilinear(smooth, p.h, p.w, ny, nx)) keep = false;
        }
        if (!keep) break;
      }
      if (!keep) out.values[i] = 0.0;
    }
  return out;
}

}  // namespace detail

// Thins an edge map: suppressed pixels become 0, kept pixels keep their value.
// Passes repeat until the kept set is stable, so the result is a fixed point
// and thinning is idempotent.
inline EdgeMap nms_thin(const EdgeMap& p, const NmsConfig& cfg = {}) {
  EdgeMap cur = p;
  for (std::size_t pass = 0; pass < cfg.max_passes; ++pass) {
    EdgeMap next = detail::nms_pass(cur, cfg);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

}  // namespace crispedge
