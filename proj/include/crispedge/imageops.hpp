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
#include <span>
#include <vector>

namespace crispedge {

// Bilinear sample of a row-major plane with edge-clamped coordinates.
inline double sample_bilinear(std::span<const double> plane, std::size_t h, std::size_t w,
                              double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  const double top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
  const double bot = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
  return top * (1.0 - fy) + bot * fy;
}

// Half-pixel-centre bilinear resize. Same dims returns an exact copy.
inline std::vector<double> resize_bilinear(std::span<const double> src, std::size_t h,
                                           std::size_t w, std::size_t oh, std::size_t ow) {
  if (oh == h && ow == w) return {src.begin(), src.end()};
  std::vector<double> out(oh * ow);
  const double sy = static_cast<double>(h) / static_cast<double>(oh);
  const double sx = static_cast<double>(w) / static_cast<double>(ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      out[y * ow + x] = sample_bilinear(src, h, w, (static_cast<double>(y) + 0.5) * sy - 0.5,
                                        (static_cast<double>(x) + 0.5) * sx - 0.5);
  return out;
}

template <typename T>
std::vector<T> resize_nearest(std::span<const T> src, std::size_t h, std::size_t w,
                              std::size_t oh, std::size_t ow) {
  if (oh == h && ow == w) return {src.begin(), src.end()};
  std::vector<T> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    const auto sy = std::min(h - 1, static_cast<std::size_t>((static_cast<double>(y) + 0.5) *
                                                             static_cast<double>(h) /
                                                             static_cast<double>(oh)));
    for (std::size_t x = 0; x < ow; ++x) {
      const auto sx = std::min(w - 1, static_cast<std::size_t>((static_cast<double>(x) + 0.5) *
                                                               static_cast<double>(w) /
                                                               static_cast<double>(ow)));
      out[y * ow + x] = src[sy * w + sx];
    }
  }
  return out;
}

// Separable Gaussian blur with replicated borders.
inline std::vector<double> gaussian_blur(std::span<const double> src, std::size_t h, std::size_t w, double sigma,
                                         std::size_t radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  const long H = static_cast<long>(h), W = static_cast<long>(w), r = static_cast<long>(radius);
  std::vector<double> tmp(h * w), out(h * w);
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x) {
      double acc = 0.0;
      for (long i = -r; i <= r; ++i)
        acc += k[static_cast<std::size_t>(i + r)] * src[static_cast<std::size_t>(y * W + std::clamp(x + i, 0L, W - 1))];
      tmp[static_cast<std::size_t>(y * W + x)] = acc;
    }
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x) {
      double acc = 0.0;
      for (long i = -r; i <= r; ++i)
        acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0L, H - 1) * W + x)];
      out[static_cast<std::size_t>(y * W + x)] = acc;
    }
  return out;
}

}  // namespace crispedge
