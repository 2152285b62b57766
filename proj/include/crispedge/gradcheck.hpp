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
#include <functional>
#include <random>
#include <vector>

#include "crispedge/layers.hpp"

namespace crispedge {

struct GradCheckReport {
  LayerKind kind = LayerKind::kConv;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  bool passed = false;
};

// |a - b| / max(|a|, |b|, floor). The floor keeps exact-zero gradients from
// turning rounding noise into a relative blow-up.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckOptions {
  double step = 1e-3;
  double relu_margin = 0.05;
  std::uint64_t seed = 0;
  std::size_t batch = 2;
  std::size_t size = 6;  // spatial side of the probe input
  bool plant_zero = false;  // put an exact 0 at input coordinate 0
};

// Compares analytic input and parameter gradients of one layer against
// central differences of L = sum(r * layer(x)) for a random probe r.
inline GradCheckReport grad_check(const LayerSpec& spec, double tolerance,
                                  const GradCheckOptions& opt = {}) {
  spec.validate();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_tensor = [&](Shape4 s) {
    Tensor4 t(s);
    for (auto& v : t.vec()) v = unit(rng);
    return t;
  };

  std::size_t side = opt.size;
  if (spec.kind == LayerKind::kGroupedDeconv) side = std::max<std::size_t>(2, side / 2);
  const Shape4 in_shape{opt.batch, spec.in_channels, side, side};

  Tensor4 x = random_tensor(in_shape);
  Tensor4 x2 = random_tensor(in_shape);  // second operand of the sum
  if (spec.kind == LayerKind::kRelu) {
    for (auto& v : x.vec())
      if (std::abs(v) < opt.relu_margin) v = std::copysign(opt.relu_margin + std::abs(v), v);
  }
  if (spec.kind == LayerKind::kMaxPool2) {
    // Redraw every 2x2 window until its maximum is unambiguous under +-step.
    for (std::size_t n = 0; n < in_shape.n; ++n)
      for (std::size_t c = 0; c < in_shape.c; ++c)
        for (std::size_t y = 0; y < side; y += 2)
          for (std::size_t xx = 0; xx < side; xx += 2) {
            for (;;) {
              double vals[4];
              for (auto& v : vals) v = unit(rng);
              double sorted[4] = {vals[0], vals[1], vals[2], vals[3]};
              std::sort(sorted, sorted + 4);
              if (sorted[3] - sorted[2] <= 4.0 * opt.step) continue;
              x(n, c, y, xx) = vals[0];
              x(n, c, y, xx + 1) = vals[1];
              x(n, c, y + 1, xx) = vals[2];
              x(n, c, y + 1, xx + 1) = vals[3];
              break;
            }
          }
  }

  if (opt.plant_zero) x[0] = 0.0;

  LayerParams params;
  if (spec.has_params()) {
    params = LayerParams(spec);
    for (auto& v : params.weight.values.vec()) v = unit(rng);
    for (auto& v : params.bias.values.vec()) v = unit(rng);
  }

  auto forward = [&](const Tensor4& a) -> Tensor4 {
    switch (spec.kind) {
      case LayerKind::kConv: return conv_forward(a, params, spec);
      case LayerKind::kGroupedDeconv: return grouped_deconv_forward(a, params, spec);
      case LayerKind::kMaxPool2: return maxpool2_forward(a);
      case LayerKind::kRelu: return relu_forward(a);
      case LayerKind::kSigmoid: return sigmoid_forward(a);
      case LayerKind::kSum: return sum_forward(a, x2);
    }
    return a;
  };

  const Tensor4 probe = random_tensor(forward(x).shape());
  auto loss = [&](const Tensor4& a) {
    const Tensor4 out = forward(a);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += probe[i] * out[i];
    return s;
  };

  Tensor4 gx, gx2;
  switch (spec.kind) {
    case LayerKind::kConv: gx = conv_backward(x, probe, params, spec); break;
    case LayerKind::kGroupedDeconv: gx = grouped_deconv_backward(x, probe, params, spec); break;
    case LayerKind::kMaxPool2: gx = maxpool2_backward(x, probe); break;
    case LayerKind::kRelu: gx = relu_backward(x, probe); break;
    case LayerKind::kSigmoid: gx = sigmoid_backward(x, probe); break;
    case LayerKind::kSum: std::tie(gx, gx2) = sum_backward(probe); break;
  }

  GradCheckReport report;
  report.kind = spec.kind;
  auto probe_coord = [&](double& slot, double analytic, bool exclude) {
    if (exclude) {
      ++report.excluded;
      return;
    }
    const double saved = slot;
    slot = saved + opt.step;
    const double up = loss(x);
    slot = saved - opt.step;
    const double down = loss(x);
    slot = saved;
    const double numeric = (up - down) / (2.0 * opt.step);
    report.max_rel_error = std::max(report.max_rel_error, relative_error(analytic, numeric));
    ++report.checked;
  };

  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool at_kink = spec.kind == LayerKind::kRelu && std::abs(x[i]) <= opt.step;
    probe_coord(x[i], gx[i], at_kink);
  }
  if (spec.kind == LayerKind::kSum)
    for (std::size_t i = 0; i < x2.size(); ++i) probe_coord(x2[i], gx2[i], false);
  if (spec.has_params()) {
    for (std::size_t i = 0; i < params.weight.values.size(); ++i)
      probe_coord(params.weight.values[i], params.weight.grad[i], false);
    for (std::size_t i = 0; i < params.bias.values.size(); ++i)
      probe_coord(params.bias.values[i], params.bias.grad[i], false);
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace crispedge
