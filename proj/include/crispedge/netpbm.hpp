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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "crispedge/maps.hpp"
#include "crispedge/tensor.hpp"

namespace crispedge {

struct UnsupportedFormat : IoError {
  using IoError::IoError;
};

// Decoded netpbm raster; samples interleaved per pixel.
struct Raster {
  std::size_t w = 0, h = 0, channels = 1;
  unsigned maxval = 255;
  std::vector<std::uint16_t> samples;
};

namespace detail {

class PnmHeaderReader {
 public:
  PnmHeaderReader(const std::vector<char>& buf, std::string path) : b_(buf), path_(std::move(path)) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_])) && b_[pos_] != '#')
      t += b_[pos_++];
    if (t.empty()) fail("unexpected end of header");
    return t;
  }
  std::size_t number(const char* what) {
    std::string t = token();
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c))) fail(std::string("bad ") + what + " '" + t + "'");
    try {
      return std::stoul(t);
    } catch (const std::exception&) {
      fail(std::string("bad ") + what + " '" + t + "'");
    }
    return 0;
  }
  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
      fail("missing whitespace after header");
    if (b_[pos_] == '\n') ++line_;
    ++pos_;
  }
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ":" + std::to_string(line_) + ": " + msg);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      const char c = b_[pos_];
      if (c == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (c == '\n') ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::vector<char>& b_;
  std::string path_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline std::vector<char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Reads P2, P3, P5 or P6 with maxval up to 65535.
inline Raster read_netpbm(const std::string& path) {
  const std::vector<char> buf = detail::slurp(path);
  detail::PnmHeaderReader hdr(buf, path);
  const std::string magic = hdr.token();
  bool ascii;
  Raster r;
  if (magic == "P2" || magic == "P5") {
    r.channels = 1;
    ascii = magic == "P2";
  } else if (magic == "P3" || magic == "P6") {
    r.channels = 3;
    ascii = magic == "P3";
  } else {
    hdr.fail("unsupported magic '" + magic + "'");
  }
  r.w = hdr.number("width");
  r.h = hdr.number("height");
  const std::size_t maxval = hdr.number("maxval");
  if (maxval == 0 || maxval > 65535) hdr.fail("maxval " + std::to_string(maxval) + " out of range");
  r.maxval = static_cast<unsigned>(maxval);
  const std::size_t count = r.w * r.h * r.channels;
  r.samples.resize(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = hdr.number("sample");
      if (v > maxval) hdr.fail("sample exceeds maxval");
      r.samples[i] = static_cast<std::uint16_t>(v);
    }
    return r;
  }
  hdr.end_header();
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::size_t pos = hdr.pos();
  if (buf.size() - pos < count * bytes_per)
    throw ParseError(path + ": truncated pixel data (expected " + std::to_string(count * bytes_per) +
                     " bytes)");
  for (std::size_t i = 0; i < count; ++i) {
    std::uint16_t v = static_cast<unsigned char>(buf[pos++]);
    if (bytes_per == 2) v = static_cast<std::uint16_t>((v << 8) | static_cast<unsigned char>(buf[pos++]));
    if (v > maxval) throw ParseError(path + ": sample exceeds maxval");
    r.samples[i] = v;
  }
  return r;
}

// Writes binary P5/P6 (8- or 16-bit depending on maxval).
inline void write_netpbm(const std::string& path, const Raster& r) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << (r.channels == 3 ? "P6" : "P5") << "\n" << r.w << " " << r.h << "\n" << r.maxval << "\n";
  std::vector<char> data;
  data.reserve(r.samples.size() * 2);
  for (std::uint16_t v : r.samples) {
    if (r.maxval > 255) data.push_back(static_cast<char>(v >> 8));
    data.push_back(static_cast<char>(v & 0xff));
  }
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline Raster require_8bit(Raster r, const std::string& path) {
  if (r.maxval != 255)
    throw UnsupportedFormat(path + ": maxval " + std::to_string(r.maxval) + " unsupported (expected 255)");
  return r;
}

// 8-bit image as a 1 x C x H x W tensor with values in [0, 1].
inline Tensor4 load_image(const std::string& path) {
  const Raster r = require_8bit(read_netpbm(path), path);
  Tensor4 t(1, r.channels, r.h, r.w);
  for (std::size_t y = 0; y < r.h; ++y)
    for (std::size_t x = 0; x < r.w; ++x)
      for (std::size_t c = 0; c < r.channels; ++c)
        t(0, c, y, x) = r.samples[(y * r.w + x) * r.channels + c] / 255.0;
  return t;
}

inline void save_image(const std::string& path, const Tensor4& img) {
  if (img.n() != 1 || (img.c() != 1 && img.c() != 3))
    throw UsageError("save_image: expected 1x1xHxW or 1x3xHxW, got " + img.shape().str());
  Raster r{img.w(), img.h(), img.c(), 255, {}};
  r.samples.resize(img.w() * img.h() * img.c());
  for (std::size_t y = 0; y < r.h; ++y)
    for (std::size_t x = 0; x < r.w; ++x)
      for (std::size_t c = 0; c < r.channels; ++c)
        r.samples[(y * r.w + x) * r.channels + c] =
            static_cast<std::uint16_t>(std::lround(std::clamp(img(0, c, y, x), 0.0, 1.0) * 255.0));
  write_netpbm(path, r);
}

// Binary annotation: grayscale samples >= 128 are boundary.
inline GroundTruth load_annotation(const std::string& path) {
  const Raster r = require_8bit(read_netpbm(path), path);
  if (r.channels != 1) throw UnsupportedFormat(path + ": annotations must be grayscale");
  GroundTruth g(r.h, r.w);
  for (std::size_t i = 0; i < g.size(); ++i) g.labels[i] = r.samples[i] >= 128 ? 1 : 0;
  return g;
}

inline void save_annotation(const std::string& path, const GroundTruth& g) {
  Raster r{g.w, g.h, 1, 255, std::vector<std::uint16_t>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) r.samples[i] = g.labels[i] ? 255 : 0;
  write_netpbm(path, r);
}

// Prediction maps are stored as 16-bit P5, value = round(p * 65535); 8-bit
// files are accepted too.
inline void save_prediction(const std::string& path, const EdgeMap& p) {
  Raster r{p.w, p.h, 1, 65535, std::vector<std::uint16_t>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i)
    r.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(p[i], 0.0, 1.0) * 65535.0));
  write_netpbm(path, r);
}

inline EdgeMap load_prediction(const std::string& path) {
  const Raster r = read_netpbm(path);
  if (r.channels != 1) throw UnsupportedFormat(path + ": predictions must be grayscale");
  if (r.maxval != 255 && r.maxval != 65535)
    throw UnsupportedFormat(path + ": prediction maxval must be 255 or 65535");
  EdgeMap p(r.h, r.w);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(r.samples[i]) / r.maxval;
  return p;
}

}  // namespace crispedge
