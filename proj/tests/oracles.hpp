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

// Test-only reference implementations. Deliberately naive and independent of
// the production code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "crispedge/layers.hpp"

namespace crispedge::oracle {

// Direct nested-loop grouped convolution with zero padding.
inline Tensor4 naive_conv(const Tensor4& in, const Tensor4& w, const Tensor4& b,
                          std::size_t stride, std::size_t pad, std::size_t groups) {
  const long long H = static_cast<long long>(in.h()), W = static_cast<long long>(in.w());
  const long long KH = static_cast<long long>(w.h()), KW = static_cast<long long>(w.w());
  const long long OH = (H + 2 * static_cast<long long>(pad) - KH) / static_cast<long long>(stride) + 1;
  const long long OW = (W + 2 * static_cast<long long>(pad) - KW) / static_cast<long long>(stride) + 1;
  const std::size_t OC = w.n(), ICPG = w.c(), OCPG = OC / groups;
  Tensor4 out(in.n(), OC, static_cast<std::size_t>(OH), static_cast<std::size_t>(OW));
  for (std::size_t n = 0; n < in.n(); ++n)
    for (std::size_t oc = 0; oc < OC; ++oc)
      for (long long oy = 0; oy < OH; ++oy)
        for (long long ox = 0; ox < OW; ++ox) {
          double acc = b[oc];
          for (std::size_t icl = 0; icl < ICPG; ++icl)
            for (long long ky = 0; ky < KH; ++ky)
              for (long long kx = 0; kx < KW; ++kx) {
                const long long iy = oy * static_cast<long long>(stride) + ky - static_cast<long long>(pad);
                const long long ix = ox * static_cast<long long>(stride) + kx - static_cast<long long>(pad);
                if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
                acc += in(n, (oc / OCPG) * ICPG + icl, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                       w(oc, icl, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx));
              }
          out(n, oc, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) = acc;
        }
  return out;
}

// Transposed convolution written as a gather: each output pixel sums every
// (input pixel, kernel tap) pair that lands on it.
inline Tensor4 naive_deconv(const Tensor4& in, const Tensor4& w, const Tensor4& b,
                            std::size_t stride, std::size_t pad, std::size_t groups) {
  const long long H = static_cast<long long>(in.h()), W = static_cast<long long>(in.w());
  const long long KH = static_cast<long long>(w.h()), KW = static_cast<long long>(w.w());
  const long long S = static_cast<long long>(stride), P = static_cast<long long>(pad);
  const long long OH = (H - 1) * S + KH - 2 * P, OW = (W - 1) * S + KW - 2 * P;
  const std::size_t IC = in.c(), OCPG = w.c(), ICPG = IC / groups, OC = OCPG * groups;
  Tensor4 out(in.n(), OC, static_cast<std::size_t>(OH), static_cast<std::size_t>(OW));
  for (std::size_t n = 0; n < in.n(); ++n)
    for (std::size_t oc = 0; oc < OC; ++oc)
      for (long long oy = 0; oy < OH; ++oy)
        for (long long ox = 0; ox < OW; ++ox) {
          double acc = b[oc];
          const std::size_t g = oc / OCPG, ocl = oc % OCPG;
          for (std::size_t icl = 0; icl < ICPG; ++icl)
            for (long long iy = 0; iy < H; ++iy)
              for (long long ix = 0; ix < W; ++ix) {
                const long long ky = oy - iy * S + P, kx = ox - ix * S + P;
                if (ky < 0 || kx < 0 || ky >= KH || kx >= KW) continue;
                acc += in(n, g * ICPG + icl, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                       w(g * ICPG + icl, ocl, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx));
              }
          out(n, oc, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) = acc;
        }
  return out;
}

inline Tensor4 random_tensor(Shape4 s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor4 t(s);
  for (auto& v : t.vec()) v = d(rng);
  return t;
}

// Central difference of a scalar function of one coordinate.
inline double central_difference(const std::function<double()>& f, double& slot, double step) {
  const double saved = slot;
  slot = saved + step;
  const double up = f();
  slot = saved - step;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * step);
}

inline double max_relative_error(const Tensor4& a, const Tensor4& b) {
  a.require_same(b, "max_relative_error");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::max({std::abs(a[i]), std::abs(b[i]), 1e-3});
    m = std::max(m, std::abs(a[i] - b[i]) / d);
  }
  return m;
}

}  // namespace crispedge::oracle
