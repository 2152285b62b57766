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
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "crispedge/dataset.hpp"
#include "crispedge/imageops.hpp"

namespace crispedge {

enum class ShapeKind { kEllipse, kPolygon };

struct Shape {
  ShapeKind kind = ShapeKind::kEllipse;
  double cx = 0, cy = 0;        // ellipse centre (pixel-centre coordinates)
  double rx = 1, ry = 1, angle = 0;
  std::vector<std::pair<double, double>> vertices;  // polygon (x, y)
  double fill = 1.0;

  bool contains(double x, double y) const {
    if (kind == ShapeKind::kEllipse) {
      const double dx = x - cx, dy = y - cy;
      const double c = std::cos(angle), s = std::sin(angle);
      const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
      return u * u + v * v <= 1.0;
    }
    bool inside = false;  // even-odd crossing test
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto [xi, yi] = vertices[i];
      const auto [xj, yj] = vertices[j];
      if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
  }

  Shape translated(double dx, double dy) const {
    Shape s = *this;
    s.cx += dx;
    s.cy += dy;
    for (auto& [x, y] : s.vertices) x += dx, y += dy;
    return s;
  }

  // Axis-aligned rectangle covering pixels [x0, x1] x [y0, y1] inclusive.
  static Shape rectangle(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, double fill) {
    Shape s;
    s.kind = ShapeKind::kPolygon;
    const double l = x0 - 0.5, r = x1 + 0.5, t = y0 - 0.5, b = y1 + 0.5;
    s.vertices = {{l, t}, {r, t}, {r, b}, {l, b}};
    s.fill = fill;
    return s;
  }
};

struct SynthSpec {
  std::size_t height = 64, width = 64;
  std::size_t min_shapes = 2, max_shapes = 4;
  bool ellipses = true, polygons = true;
  double fill_lo = 0.35, fill_hi = 1.0;
  double background_lo = 0.0, background_hi = 0.25;
  double min_contrast = 0.1;  // between any two region fills in one scene
  double blur_sigma = 1.0;  // optical blur applied before noise; 0 disables
  double noise_sigma = 0.03;
  // Simulated annotators: each traces every shape shifted by up to
  // `annotator_jitter` px per axis. One annotator with no jitter gives the
  // exact boundary.
  std::size_t annotators = 1;
  double annotator_jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (height < 16 || width < 16) throw ConfigError("synth canvas must be at least 16x16");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    if (!(blur_sigma >= 0.0)) throw ConfigError("blur sigma must be >= 0");
    if (annotators < 1) throw ConfigError("annotators must be >= 1");
    if (!(annotator_jitter >= 0.0)) throw ConfigError("annotator jitter must be >= 0");
    if (min_shapes > max_shapes) throw ConfigError("min_shapes exceeds max_shapes");
    if (max_shapes > 0 && !ellipses && !polygons) throw ConfigError("no shape kinds enabled");
    if (!(fill_lo <= fill_hi) || !(background_lo <= background_hi))
      throw ConfigError("fill ranges must be ordered");
  }
};

// Region ids in painter's order: 0 background, i+1 for shapes[i].
inline std::vector<std::size_t> region_map(std::size_t h, std::size_t w, const std::vector<Shape>& shapes) {
  std::vector<std::size_t> region(h * w, 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i].contains(static_cast<double>(x), static_cast<double>(y))) region[y * w + x] = i + 1;
  return region;
}

// A pixel is a boundary pixel when a 4-neighbour belongs to another region and
// this pixel is on the brighter side (ties go to the later-drawn region). That
// yields the inner, 8-connected, 1-px contour of each visible region. The
// canvas frame never carries boundary pixels.
inline GroundTruth trace_boundaries(std::size_t h, std::size_t w, double background,
                                    const std::vector<Shape>& shapes) {
  const auto region = region_map(h, w, shapes);
  auto fill_of = [&](std::size_t r) { return r == 0 ? background : shapes[r - 1].fill; };
  GroundTruth g(h, w);
  for (std::size_t y = 1; y + 1 < h; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const std::size_t me = region[y * w + x];
      const double f = fill_of(me);
      for (std::size_t q : {(y - 1) * w + x, (y + 1) * w + x, y * w + x - 1, y * w + x + 1}) {
        const std::size_t other = region[q];
        if (other == me) continue;
        const double fo = fill_of(other);
        if (f > fo || (f == fo && me > other)) {
          g.at(y, x) = 1;
          break;
        }
      }
    }
  return g;
}

// Renders the scene (optionally blurred, then noised) with its exact boundary.
inline Sample render_scene(std::size_t h, std::size_t w, double background,
                           const std::vector<Shape>& shapes, double noise_sigma = 0.0,
                           std::mt19937_64* rng = nullptr, std::string id = "scene", double blur_sigma = 0.0) {
  const auto region = region_map(h, w, shapes);
  Sample s{std::move(id), Tensor4(1, 1, h, w), trace_boundaries(h, w, background, shapes)};
  std::vector<double> clean(h * w);
  for (std::size_t i = 0; i < h * w; ++i) clean[i] = region[i] == 0 ? background : shapes[region[i] - 1].fill;
  if (blur_sigma > 0.0)
    clean = gaussian_blur(clean, h, w, blur_sigma, static_cast<std::size_t>(std::ceil(3.0 * blur_sigma)));
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double v = clean[y * w + x];
      if (noise_sigma > 0.0 && rng) v += noise(*rng);
      s.image(0, 0, y, x) = std::clamp(v, 0.0, 1.0);
    }
  return s;
}

namespace detail {

inline Shape random_shape(const SynthSpec& spec, std::mt19937_64& rng, double fill) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double H = static_cast<double>(spec.height), W = static_cast<double>(spec.width);
  const double R = std::min(H, W);
  Shape s;
  s.fill = fill;
  const bool ellipse = spec.ellipses && (!spec.polygons || u(rng) < 0.5);
  const double cx = W * (0.15 + 0.7 * u(rng)), cy = H * (0.15 + 0.7 * u(rng));
  if (ellipse) {
    s.kind = ShapeKind::kEllipse;
    s.cx = cx;
    s.cy = cy;
    s.rx = R * (0.1 + 0.2 * u(rng));
    s.ry = R * (0.1 + 0.2 * u(rng));
    s.angle = std::numbers::pi * u(rng);
  } else {
    s.kind = ShapeKind::kPolygon;
    const int n = 3 + static_cast<int>(u(rng) * 4.0);  // 3..6 vertices
    const double radius = R * (0.12 + 0.2 * u(rng));
    std::vector<double> angles(static_cast<std::size_t>(n));
    for (auto& a : angles) a = 2.0 * std::numbers::pi * u(rng);
    std::sort(angles.begin(), angles.end());
    for (double a : angles) {
      const double r = radius * (0.6 + 0.4 * u(rng));
      s.vertices.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
    }
  }
  return s;
}

}  // namespace detail

struct SynthScene {
  Sample truth;                          // image with the exact boundary
  std::vector<GroundTruth> annotations;  // one per simulated annotator
};

// Deterministic from (spec.seed, sample index).
inline SynthScene synth_scene(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double background = spec.background_lo + (spec.background_hi - spec.background_lo) * u(rng);
  const std::size_t count =
      spec.min_shapes + static_cast<std::size_t>(u(rng) * static_cast<double>(spec.max_shapes - spec.min_shapes + 1));
  std::vector<double> fills{background};
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < std::min(count, spec.max_shapes); ++i) {
    double fill = 0.0;
    for (int attempt = 0; attempt < 32; ++attempt) {
      fill = spec.fill_lo + (spec.fill_hi - spec.fill_lo) * u(rng);
      bool ok = true;
      for (double f : fills) ok &= std::abs(f - fill) >= spec.min_contrast;
      if (ok) break;
    }
    fills.push_back(fill);
    shapes.push_back(detail::random_shape(spec, rng, fill));
  }
  char id[32];
  std::snprintf(id, sizeof(id), "synth_%04zu", index);
  SynthScene scene{render_scene(spec.height, spec.width, background, shapes, spec.noise_sigma, &rng, id, spec.blur_sigma),
                   {}};
  std::uniform_real_distribution<double> jitter(-spec.annotator_jitter, spec.annotator_jitter);
  for (std::size_t a = 0; a < spec.annotators; ++a) {
    if (spec.annotator_jitter == 0.0) {
      scene.annotations.push_back(scene.truth.annotation);
      continue;
    }
    std::vector<Shape> traced;
    for (const auto& sh : shapes) {
      const double dx = jitter(rng), dy = jitter(rng);
      traced.push_back(sh.translated(dx, dy));
    }
    scene.annotations.push_back(trace_boundaries(spec.height, spec.width, background, traced));
  }
  return scene;
}

inline Sample synth_sample(const SynthSpec& spec, std::size_t index) { return synth_scene(spec, index).truth; }

// Training view: one sample per annotator, sharing the image.
inline std::vector<Sample> synth_annotated(const SynthSpec& spec, std::size_t index) {
  SynthScene scene = synth_scene(spec, index);
  if (spec.annotators == 1 && spec.annotator_jitter == 0.0) return {scene.truth};
  return expand_annotations(scene.truth.id, scene.truth.image, scene.annotations);
}


inline std::vector<Sample> synth_generate(const SynthSpec& spec, std::size_t n) {
  if (n == 0) throw UsageError("synth_generate: n must be >= 1");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth_sample(spec, i));
  return out;
}

}  // namespace crispedge
