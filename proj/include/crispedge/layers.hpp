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
#include <random>
#include <string>
#include <utility>

#include "crispedge/tensor.hpp"

namespace crispedge {

enum class LayerKind { kConv, kGroupedDeconv, kMaxPool2, kRelu, kSigmoid, kSum };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kGroupedDeconv: return "grouped-deconv";
    case LayerKind::kMaxPool2: return "maxpool2";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kSum: return "elementwise-sum";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::size_t kh = 1, kw = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t groups = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::string name;

  static LayerSpec conv(std::string name, std::size_t in, std::size_t out, std::size_t k,
                        std::size_t stride = 1, std::size_t pad = 0, std::size_t groups = 1) {
    return {LayerKind::kConv, k, k, stride, pad, groups, in, out, std::move(name)};
  }
  // Default refinement upsampler: kernel 4, stride 2, pad 1 doubles h and w.
  static LayerSpec deconv(std::string name, std::size_t channels, std::size_t k = 4,
                          std::size_t stride = 2, std::size_t pad = 1) {
    return {LayerKind::kGroupedDeconv, k, k, stride, pad, channels, channels, channels,
            std::move(name)};
  }
  static LayerSpec simple(LayerKind kind, std::size_t channels, std::string name = {}) {
    return {kind, 1, 1, 1, 0, 1, channels, channels, std::move(name)};
  }

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kGroupedDeconv;
  }

  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }

  void validate() const {
    if (!has_params()) return;
    if (groups == 0 || in_channels == 0 || out_channels == 0 || kh == 0 || kw == 0 || stride == 0)
      throw ConfigError("layer '" + label() + "': zero-sized field");
    if (in_channels % groups != 0 || out_channels % groups != 0)
      throw ConfigError("layer '" + label() + "': groups " + std::to_string(groups) +
                        " must divide in_channels " + std::to_string(in_channels) +
                        " and out_channels " + std::to_string(out_channels));
  }

  Shape4 weight_shape() const {
    if (kind == LayerKind::kConv) return {out_channels, in_channels / groups, kh, kw};
    return {in_channels, out_channels / groups, kh, kw};
  }
  Shape4 bias_shape() const { return {1, out_channels, 1, 1}; }
  std::size_t param_count() const {
    return has_params() ? weight_shape().size() + bias_shape().size() : 0;
  }

  // Convolution arithmetic for the spatial dims; throws on a non-positive result.
  Shape4 output_shape(const Shape4& in) const {
    if (kind == LayerKind::kMaxPool2) {
      if (in.h % 2 != 0 || in.w % 2 != 0)
        throw ConfigError("layer '" + label() + "': maxpool2 needs even dims, got " + in.str());
      return {in.n, in.c, in.h / 2, in.w / 2};
    }
    if (!has_params()) return in;
    if (in.c != in_channels)
      throw ConfigError("layer '" + label() + "': expected " + std::to_string(in_channels) +
                        " input channels, got " + std::to_string(in.c));
    auto axis = [&](std::size_t size, std::size_t k) -> std::size_t {
      long long out;
      if (kind == LayerKind::kConv) {
        long long span = static_cast<long long>(size + 2 * pad) - static_cast<long long>(k);
        out = span < 0 ? 0 : span / static_cast<long long>(stride) + 1;
      } else {
        out = static_cast<long long>((size - 1) * stride + k) - 2 * static_cast<long long>(pad);
        if (size == 0) out = 0;
      }
      if (out <= 0)
        throw ConfigError("layer '" + label() + "': input " + in.str() +
                          " yields empty output");
      return static_cast<std::size_t>(out);
    };
    return {in.n, out_channels, axis(in.h, kh), axis(in.w, kw)};
  }
};

// Trainable tensor with its gradient accumulator and ADAM moments.
struct ParamTensor {
  Tensor4 values;
  Tensor4 grad;
  Tensor4 m1;
  Tensor4 m2;
  std::uint64_t step = 0;

  ParamTensor() = default;
  explicit ParamTensor(Shape4 shape)
      : values(shape), grad(shape), m1(shape), m2(shape) {}
  explicit ParamTensor(Tensor4 v)
      : values(std::move(v)), grad(values.shape()), m1(values.shape()), m2(values.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

struct LayerParams {
  ParamTensor weight;
  ParamTensor bias;

  LayerParams() = default;
  explicit LayerParams(const LayerSpec& spec)
      : weight(spec.weight_shape()), bias(spec.bias_shape()) {}

  void zero_grad() {
    weight.zero_grad();
    bias.zero_grad();
  }
};

namespace detail {

// Output positions o in [lo, hi) whose source index o*stride + k - pad lies in [0, size).
inline std::pair<std::size_t, std::size_t> conv_range(std::size_t out_size, std::size_t in_size,
                                                      std::size_t k, std::size_t stride,
                                                      std::size_t pad) {
  const long long s = static_cast<long long>(stride);
  const long long off = static_cast<long long>(k) - static_cast<long long>(pad);
  long long lo = off >= 0 ? 0 : (-off + s - 1) / s;
  long long hi_num = static_cast<long long>(in_size) - 1 - off;
  long long hi = hi_num < 0 ? 0 : hi_num / s + 1;
  hi = std::min<long long>(hi, static_cast<long long>(out_size));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

inline void check_params(const LayerSpec& spec, const LayerParams& p) {
  if (!(p.weight.values.shape() == spec.weight_shape()) ||
      !(p.bias.values.shape() == spec.bias_shape()))
    throw ConfigError("layer '" + spec.label() + "': parameter shape mismatch");
}

}  // namespace detail

inline Tensor4 conv_forward(const Tensor4& in, const LayerParams& p, const LayerSpec& spec) {
  spec.validate();
  detail::check_params(spec, p);
  const Shape4 os = spec.output_shape(in.shape());
  Tensor4 out(os);
  const std::size_t icpg = spec.in_channels / spec.groups;
  const std::size_t ocpg = spec.out_channels / spec.groups;
  const auto& W = p.weight.values;
  const std::size_t s = spec.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t oc = 0; oc < os.c; ++oc) {
      auto dst = out.plane(n, oc);
      std::fill(dst.begin(), dst.end(), p.bias.values[oc]);
      const std::size_t g = oc / ocpg;
      for (std::size_t icl = 0; icl < icpg; ++icl) {
        auto src = in.plane(n, g * icpg + icl);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          auto [ylo, yhi] = detail::conv_range(os.h, in.h(), ky, s, spec.pad);
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            auto [xlo, xhi] = detail::conv_range(os.w, in.w(), kx, s, spec.pad);
            const double wv = W(oc, icl, ky, kx);
            for (std::size_t oy = ylo; oy < yhi; ++oy) {
              const std::size_t iy = oy * s + ky - spec.pad;
              double* d = dst.data() + oy * os.w;
              const double* r = src.data();
              const auto base = static_cast<std::ptrdiff_t>(iy * in.w() + kx) - pad;
              if (s == 1) {
                for (std::size_t ox = xlo; ox < xhi; ++ox)
                  d[ox] += wv * r[base + static_cast<std::ptrdiff_t>(ox)];
              } else {
                for (std::size_t ox = xlo; ox < xhi; ++ox)
                  d[ox] += wv * r[base + static_cast<std::ptrdiff_t>(ox * s)];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// Returns d(loss)/d(input); adds d(loss)/d(weight, bias) into p.*.grad.
inline Tensor4 conv_backward(const Tensor4& in, const Tensor4& upstream, LayerParams& p,
                             const LayerSpec& spec) {
  spec.validate();
  detail::check_params(spec, p);
  const Shape4 os = spec.output_shape(in.shape());
  if (!(upstream.shape() == os))
    throw ConfigError("layer '" + spec.label() + "': upstream gradient " +
                      upstream.shape().str() + " does not match output " + os.str());
  Tensor4 gin(in.shape());
  const std::size_t icpg = spec.in_channels / spec.groups;
  const std::size_t ocpg = spec.out_channels / spec.groups;
  const auto& W = p.weight.values;
  auto& GW = p.weight.grad;
  const std::size_t s = spec.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t oc = 0; oc < os.c; ++oc) {
      auto up = upstream.plane(n, oc);
      double bsum = 0.0;
      for (double v : up) bsum += v;
      p.bias.grad[oc] += bsum;
      const std::size_t g = oc / ocpg;
      for (std::size_t icl = 0; icl < icpg; ++icl) {
        const std::size_t ic = g * icpg + icl;
        auto src = in.plane(n, ic);
        auto gsrc = gin.plane(n, ic);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          auto [ylo, yhi] = detail::conv_range(os.h, in.h(), ky, s, spec.pad);
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            auto [xlo, xhi] = detail::conv_range(os.w, in.w(), kx, s, spec.pad);
            const double wv = W(oc, icl, ky, kx);
            double gw = 0.0;
            for (std::size_t oy = ylo; oy < yhi; ++oy) {
              const std::size_t iy = oy * s + ky - spec.pad;
              const double* u = up.data() + oy * os.w;
              const auto base = static_cast<std::ptrdiff_t>(iy * in.w() + kx) - pad;
              const double* r = src.data();
              double* gr = gsrc.data();
              for (std::size_t ox = xlo; ox < xhi; ++ox) {
                const std::ptrdiff_t j = base + static_cast<std::ptrdiff_t>(ox * s);
                gw += u[ox] * r[j];
                gr[j] += wv * u[ox];
              }
            }
            GW(oc, icl, ky, kx) += gw;
          }
        }
      }
    }
  }
  return gin;
}

// Grouped transposed convolution: out[oy = iy*stride - pad + ky] += in[iy] * w[ky].
inline Tensor4 grouped_deconv_forward(const Tensor4& in, const LayerParams& p,
                                      const LayerSpec& spec) {
  spec.validate();
  detail::check_params(spec, p);
  const Shape4 os = spec.output_shape(in.shape());
  Tensor4 out(os);
  const std::size_t icpg = spec.in_channels / spec.groups;
  const std::size_t ocpg = spec.out_channels / spec.groups;
  const auto& W = p.weight.values;
  const std::size_t s = spec.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t oc = 0; oc < os.c; ++oc) {
      auto d = out.plane(n, oc);
      std::fill(d.begin(), d.end(), p.bias.values[oc]);
    }
    for (std::size_t ic = 0; ic < in.c(); ++ic) {
      auto src = in.plane(n, ic);
      const std::size_t g = ic / icpg;
      for (std::size_t ocl = 0; ocl < ocpg; ++ocl) {
        auto dst = out.plane(n, g * ocpg + ocl);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          // input rows iy with oy = iy*s + ky - pad inside [0, os.h)
          auto [ylo, yhi] = detail::conv_range(in.h(), os.h, ky, s, spec.pad);
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            auto [xlo, xhi] = detail::conv_range(in.w(), os.w, kx, s, spec.pad);
            const double wv = W(ic, ocl, ky, kx);
            for (std::size_t iy = ylo; iy < yhi; ++iy) {
              const std::size_t oy = iy * s + ky - spec.pad;
              const double* r = src.data() + iy * in.w();
              double* o = dst.data();
              const auto base = static_cast<std::ptrdiff_t>(oy * os.w + kx) - pad;
              for (std::size_t ix = xlo; ix < xhi; ++ix)
                o[base + static_cast<std::ptrdiff_t>(ix * s)] += wv * r[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

inline Tensor4 grouped_deconv_backward(const Tensor4& in, const Tensor4& upstream, LayerParams& p,
                                       const LayerSpec& spec) {
  spec.validate();
  detail::check_params(spec, p);
  const Shape4 os = spec.output_shape(in.shape());
  if (!(upstream.shape() == os))
    throw ConfigError("layer '" + spec.label() + "': upstream gradient " +
                      upstream.shape().str() + " does not match output " + os.str());
  Tensor4 gin(in.shape());
  const std::size_t icpg = spec.in_channels / spec.groups;
  const std::size_t ocpg = spec.out_channels / spec.groups;
  const auto& W = p.weight.values;
  auto& GW = p.weight.grad;
  const std::size_t s = spec.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t oc = 0; oc < os.c; ++oc) {
      double bsum = 0.0;
      for (double v : upstream.plane(n, oc)) bsum += v;
      p.bias.grad[oc] += bsum;
    }
    for (std::size_t ic = 0; ic < in.c(); ++ic) {
      auto src = in.plane(n, ic);
      auto gsrc = gin.plane(n, ic);
      const std::size_t g = ic / icpg;
      for (std::size_t ocl = 0; ocl < ocpg; ++ocl) {
        auto up = upstream.plane(n, g * ocpg + ocl);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          auto [ylo, yhi] = detail::conv_range(in.h(), os.h, ky, s, spec.pad);
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            auto [xlo, xhi] = detail::conv_range(in.w(), os.w, kx, s, spec.pad);
            const double wv = W(ic, ocl, ky, kx);
            double gw = 0.0;
            for (std::size_t iy = ylo; iy < yhi; ++iy) {
              const std::size_t oy = iy * s + ky - spec.pad;
              const double* r = src.data() + iy * in.w();
              double* gr = gsrc.data() + iy * in.w();
              const double* u = up.data();
              const auto base = static_cast<std::ptrdiff_t>(oy * os.w + kx) - pad;
              for (std::size_t ix = xlo; ix < xhi; ++ix) {
                const double uv = u[base + static_cast<std::ptrdiff_t>(ix * s)];
                gw += r[ix] * uv;
                gr[ix] += wv * uv;
              }
            }
            GW(ic, ocl, ky, kx) += gw;
          }
        }
      }
    }
  }
  return gin;
}

namespace detail {

// Row-major first occurrence of the 2x2 block maximum.
inline std::size_t pool_argmax(std::span<const double> plane, std::size_t w, std::size_t y,
                               std::size_t x) {
  std::size_t best = (2 * y) * w + 2 * x;
  const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
  for (std::size_t c : cand)
    if (plane[c] > plane[best]) best = c;
  return best;
}

}  // namespace detail

inline Tensor4 maxpool2_forward(const Tensor4& in) {
  const Shape4 os = LayerSpec::simple(LayerKind::kMaxPool2, in.c(), "maxpool2").output_shape(in.shape());
  Tensor4 out(os);
  for (std::size_t n = 0; n < os.n; ++n)
    for (std::size_t c = 0; c < os.c; ++c) {
      auto src = in.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t y = 0; y < os.h; ++y)
        for (std::size_t x = 0; x < os.w; ++x)
          dst[y * os.w + x] = src[detail::pool_argmax(src, in.w(), y, x)];
    }
  return out;
}

inline Tensor4 maxpool2_backward(const Tensor4& in, const Tensor4& upstream) {
  const Shape4 os = LayerSpec::simple(LayerKind::kMaxPool2, in.c(), "maxpool2").output_shape(in.shape());
  if (!(upstream.shape() == os))
    throw ConfigError("maxpool2: upstream gradient shape " + upstream.shape().str() +
                      " does not match output " + os.str());
  Tensor4 gin(in.shape());
  for (std::size_t n = 0; n < os.n; ++n)
    for (std::size_t c = 0; c < os.c; ++c) {
      auto src = in.plane(n, c);
      auto up = upstream.plane(n, c);
      auto g = gin.plane(n, c);
      for (std::size_t y = 0; y < os.h; ++y)
        for (std::size_t x = 0; x < os.w; ++x)
          g[detail::pool_argmax(src, in.w(), y, x)] += up[y * os.w + x];
    }
  return gin;
}

inline Tensor4 relu_forward(const Tensor4& in) {
  Tensor4 out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return out;
}

inline Tensor4 relu_backward(const Tensor4& in, const Tensor4& upstream) {
  in.require_same(upstream, "relu_backward");
  Tensor4 gin(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > 0.0 ? upstream[i] : 0.0;
  return gin;
}

inline constexpr double kProbClamp = 1e-6;

inline double sigmoid(double m) {
  const double s = m >= 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
  return std::clamp(s, kProbClamp, 1.0 - kProbClamp);
}

inline Tensor4 sigmoid_forward(const Tensor4& in) {
  Tensor4 out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
  return out;
}

// The clamp is passed through: the derivative is that of the unclamped sigmoid.
inline Tensor4 sigmoid_backward(const Tensor4& in, const Tensor4& upstream) {
  in.require_same(upstream, "sigmoid_backward");
  Tensor4 gin(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double m = in[i];
    const double s = m >= 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
    gin[i] = upstream[i] * s * (1.0 - s);
  }
  return gin;
}

inline Tensor4 sum_forward(const Tensor4& a, const Tensor4& b) {
  Tensor4 out = a;
  out += b;
  return out;
}

inline std::pair<Tensor4, Tensor4> sum_backward(const Tensor4& upstream) {
  return {upstream, upstream};
}

// He-normal weights, zero biases.
template <typename Rng>
void init_params(LayerParams& p, const LayerSpec& spec, Rng& rng) {
  const auto ws = spec.weight_shape();
  const std::size_t fan_in = ws.c * ws.h * ws.w;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : p.weight.values.vec()) v = dist(rng);
  p.bias.values.fill(0.0);
}

}  // namespace crispedge
