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
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "crispedge/dataset.hpp"
#include "crispedge/imageops.hpp"
#include "crispedge/parallel.hpp"

namespace crispedge {

struct AugmentSpec {
  double scale_lo = 0.7, scale_hi = 1.3;
  std::size_t scales_per_sample = 1;
  std::size_t rotations = 16;
  bool flips = true;
  std::size_t min_crop = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo)) throw ConfigError("scale range must be within (0, inf)");
    if (rotations == 0) throw ConfigError("rotation count must be >= 1");
    if (scales_per_sample == 0) throw ConfigError("scales per sample must be >= 1");
  }
  std::size_t variants_per_sample() const { return scales_per_sample * rotations * (flips ? 2 : 1); }
};

// Largest axis-aligned rectangle inside a w x h rectangle rotated by `angle`
// radians. Returns (width, height).
inline std::pair<double, double> inscribed_rect(double w, double h, double angle) {
  if (w <= 0 || h <= 0) return {0, 0};
  const bool wide = w >= h;
  const double lng = wide ? w : h, shrt = wide ? h : w;
  const double s = std::abs(std::sin(angle)), c = std::abs(std::cos(angle));
  if (shrt <= 2.0 * s * c * lng || std::abs(s - c) < 1e-10) {
    const double x = 0.5 * shrt;
    return wide ? std::pair{x / s, x / c} : std::pair{x / c, x / s};
  }
  const double cos2 = c * c - s * s;
  return {(w * c - h * s) / cos2, (h * c - w * s) / cos2};
}

// Exact counter-clockwise rotation by quarter_turns * 90 degrees.
inline Sample rotate90(const Sample& in, int quarter_turns) {
  Sample s = in;
  const int k = ((quarter_turns % 4) + 4) % 4;
  for (int t = 0; t < k; ++t) {
    const std::size_t h = s.image.h(), w = s.image.w(), C = s.image.c();
    Tensor4 img(1, C, w, h);
    GroundTruth gt(w, h);
    for (std::size_t y = 0; y < w; ++y)
      for (std::size_t x = 0; x < h; ++x) {
        for (std::size_t c = 0; c < C; ++c) img(0, c, y, x) = s.image(0, c, x, w - 1 - y);
        gt.at(y, x) = s.annotation.at(x, w - 1 - y);
      }
    s.image = std::move(img);
    s.annotation = std::move(gt);
  }
  return s;
}

inline Sample flip_horizontal(const Sample& in) {
  Sample s = in;
  const std::size_t h = s.image.h(), w = s.image.w();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < s.image.c(); ++c) s.image(0, c, y, x) = in.image(0, c, y, w - 1 - x);
      s.annotation.at(y, x) = in.annotation.at(y, w - 1 - x);
    }
  return s;
}

// Image resized bilinearly, annotation by nearest neighbour (stays binary).
inline Sample rescale(const Sample& in, double scale) {
  const std::size_t h = in.image.h(), w = in.image.w();
  const auto oh = static_cast<std::size_t>(std::max(1L, std::lround(static_cast<double>(h) * scale)));
  const auto ow = static_cast<std::size_t>(std::max(1L, std::lround(static_cast<double>(w) * scale)));
  if (oh == h && ow == w) return in;
  Sample s{in.id, Tensor4(1, in.image.c(), oh, ow), GroundTruth()};
  for (std::size_t c = 0; c < in.image.c(); ++c) {
    auto r = resize_bilinear(in.image.plane(0, c), h, w, oh, ow);
    std::copy(r.begin(), r.end(), s.image.plane(0, c).begin());
  }
  s.annotation = GroundTruth(oh, ow, resize_nearest<std::uint8_t>(in.annotation.labels, h, w, oh, ow));
  return s;
}

// Counter-clockwise rotation by `degrees` about the image centre, cropped to
// the largest inscribed axis-aligned rectangle. Right angles are lossless.
inline Sample rotate_and_crop(const Sample& in, double degrees) {
  const double turns = degrees / 90.0;
  if (std::abs(turns - std::round(turns)) < 1e-12) return rotate90(in, static_cast<int>(std::lround(turns)));
  const double theta = degrees * std::numbers::pi / 180.0;
  const std::size_t h = in.image.h(), w = in.image.w();
  auto [cw, ch] = inscribed_rect(static_cast<double>(w), static_cast<double>(h), theta);
  const auto ow = static_cast<std::size_t>(std::floor(cw + 1e-9));
  const auto oh = static_cast<std::size_t>(std::floor(ch + 1e-9));
  Sample s{in.id, Tensor4(1, in.image.c(), oh, ow), GroundTruth(oh, ow)};
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  const double ocx = (static_cast<double>(ow) - 1) / 2, ocy = (static_cast<double>(oh) - 1) / 2;
  const double c = std::cos(theta), sn = std::sin(theta);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      const double u = static_cast<double>(x) - ocx, v = static_cast<double>(y) - ocy;
      const double sx = cx + u * c - v * sn, sy = cy + u * sn + v * c;
      for (std::size_t ch_i = 0; ch_i < in.image.c(); ++ch_i)
        s.image(0, ch_i, y, x) = sample_bilinear(in.image.plane(0, ch_i), h, w, sy, sx);
      const auto nx = static_cast<std::size_t>(std::clamp(std::lround(sx), 0L, static_cast<long>(w) - 1));
      const auto ny = static_cast<std::size_t>(std::clamp(std::lround(sy), 0L, static_cast<long>(h) - 1));
      s.annotation.at(y, x) = in.annotation.at(ny, nx) >= 1 ? 1 : 0;
    }
  return s;
}

inline std::string variant_name(const std::string& id, double scale, std::size_t rotation, bool flipped) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "_s%.3f_r%zu_f%d", scale, rotation, flipped ? 1 : 0);
  return id + buf;
}

namespace detail {

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Stratified scale draws in [lo, hi], deterministic per (seed, id, k).
inline std::vector<double> draw_scales(const AugmentSpec& spec, const std::string& id) {
  std::vector<double> out;
  const auto K = spec.scales_per_sample;
  const std::uint64_t hid = detail::fnv1a(id);
  for (std::size_t k = 0; k < K; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(hid), static_cast<std::uint32_t>(hid >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    out.push_back(spec.scale_lo + (spec.scale_hi - spec.scale_lo) * (static_cast<double>(k) + u) / static_cast<double>(K));
  }
  return out;
}

struct AugmentResult {
  std::vector<Sample> samples;
  std::size_t dropped = 0;  // variants whose crop fell under min_crop
};

inline AugmentResult augment_with_scales(const Sample& sample, const AugmentSpec& spec,
                                         const std::vector<double>& scales) {
  spec.validate();
  sample.validate();
  AugmentResult r;
  for (double scale : scales) {
    const Sample scaled = rescale(sample, scale);
    for (std::size_t k = 0; k < spec.rotations; ++k) {
      Sample rot = rotate_and_crop(scaled, static_cast<double>(k) * 360.0 / static_cast<double>(spec.rotations));
      if (rot.image.h() < spec.min_crop || rot.image.w() < spec.min_crop) {
        r.dropped += spec.flips ? 2 : 1;
        continue;
      }
      for (int f = 0; f < (spec.flips ? 2 : 1); ++f) {
        Sample v = f ? flip_horizontal(rot) : rot;
        v.id = variant_name(sample.id, scale, k, f == 1);
        r.samples.push_back(std::move(v));
      }
    }
  }
  return r;
}

inline AugmentResult augment(const Sample& sample, const AugmentSpec& spec) {
  return augment_with_scales(sample, spec, draw_scales(spec, sample.id));
}

// Augments every sample; per-sample RNG streams make the output independent of
// the worker count.
inline AugmentResult augment_all(const std::vector<Sample>& samples, const AugmentSpec& spec,
                                 std::size_t threads = 1) {
  std::vector<AugmentResult> parts(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) { parts[i] = augment(samples[i], spec); });
  AugmentResult all;
  for (auto& p : parts) {
    all.dropped += p.dropped;
    for (auto& s : p.samples) all.samples.push_back(std::move(s));
  }
  return all;
}

}  // namespace crispedge
