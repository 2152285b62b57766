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
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace crispedge {

// Error taxonomy. The CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : IoError {
  using IoError::IoError;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptCheckpoint : IoError {
  CorruptCheckpoint(const std::string& what, std::size_t offset)
      : IoError(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct Shape4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;

  std::size_t size() const { return n * c * h * w; }
  friend bool operator==(const Shape4&, const Shape4&) = default;

  std::string str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

// Dense (batch, channel, height, width) array of doubles, row-major.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : Tensor4(Shape4{n, c, h, w}, fill) {}
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::vector<double> data)
      : Tensor4(Shape4{n, c, h, w}, std::move(data)) {}
  Tensor4(Shape4 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.str());
  }

  const Shape4& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index(n, c, y, x)];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[index(n, c, y, x)];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // One (h, w) plane.
  std::span<double> plane(std::size_t n, std::size_t c) {
    return {data_.data() + index(n, c, 0, 0), shape_.h * shape_.w};
  }
  std::span<const double> plane(std::size_t n, std::size_t c) const {
    return {data_.data() + index(n, c, 0, 0), shape_.h * shape_.w};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor4& operator+=(const Tensor4& o) {
    require_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  // Copy of batch item i as a 1-batch tensor.
  Tensor4 item(std::size_t i) const {
    Tensor4 out(1, shape_.c, shape_.h, shape_.w);
    const std::size_t stride = shape_.c * shape_.h * shape_.w;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * stride), stride, out.data_.begin());
    return out;
  }

  void require_same(const Tensor4& o, const char* what) const {
    if (!(shape_ == o.shape_))
      throw ConfigError(std::string(what) + ": shape mismatch " + shape_.str() + " vs " +
                        o.shape_.str());
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

inline double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  a.require_same(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace crispedge
