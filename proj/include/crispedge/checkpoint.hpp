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

// Binary checkpoint, little-endian:
//   "CRSPEDGE" | u32 version=1 | payload | u32 crc32(payload)
// payload:
//   u32 stages | u32 channels[stages] | u32 cardinality | u32 in_channels |
//   u32 height | u32 width | u64 seed | u32 tensor_count |
//   tensor_count x (u32 name_len | name | u32 dims[4] | f64 values[prod(dims)])

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "crispedge/model.hpp"

namespace crispedge {

inline constexpr char kCheckpointMagic[8] = {'C', 'R', 'S', 'P', 'E', 'D', 'G', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.insert(buf_.end(), b, b + sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) {
    auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> b, std::size_t base) : b_(b), base_(base) {}
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n, "name");
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void get_doubles(std::span<double> out) {
    need(out.size() * sizeof(double), "tensor values");
    std::memcpy(out.data(), b_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }
  std::size_t offset() const { return base_ + pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) throw CorruptCheckpoint(std::string("truncated ") + what, offset());
  }
  std::span<const std::uint8_t> b_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace detail

inline std::vector<std::uint8_t> save_checkpoint(const Network& net) {
  detail::ByteWriter payload;
  const NetworkConfig& cfg = net.config();
  payload.put(static_cast<std::uint32_t>(cfg.stages));
  for (std::size_t c : cfg.channels) payload.put(static_cast<std::uint32_t>(c));
  payload.put(static_cast<std::uint32_t>(cfg.cardinality));
  payload.put(static_cast<std::uint32_t>(cfg.in_channels));
  payload.put(static_cast<std::uint32_t>(cfg.height));
  payload.put(static_cast<std::uint32_t>(cfg.width));
  payload.put(static_cast<std::uint64_t>(cfg.seed));
  const auto layers = net.layers();
  payload.put(static_cast<std::uint32_t>(layers.size() * 2));
  for (const Layer* l : layers) {
    for (const auto& [suffix, t] : {std::pair<const char*, const Tensor4*>{".weight", &l->params.weight.values},
                                    {".bias", &l->params.bias.values}}) {
      const std::string name = l->spec.name + suffix;
      payload.put(static_cast<std::uint32_t>(name.size()));
      payload.put_bytes(name.data(), name.size());
      for (std::size_t d : {t->n(), t->c(), t->h(), t->w()}) payload.put(static_cast<std::uint32_t>(d));
      payload.put_bytes(t->data().data(), t->size() * sizeof(double));
    }
  }

  detail::ByteWriter out;
  out.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.put(kCheckpointVersion);
  out.put_bytes(payload.bytes().data(), payload.bytes().size());
  out.put(detail::crc32(payload.bytes()));
  return std::move(out.bytes());
}

// Validates everything before returning; never yields a partially loaded network.
inline Network load_checkpoint(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t header = sizeof(kCheckpointMagic) + sizeof(std::uint32_t);
  if (bytes.size() < header + sizeof(std::uint32_t))
    throw CorruptCheckpoint("truncated header", bytes.size());
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CorruptCheckpoint("bad magic", 0);
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof(kCheckpointMagic), sizeof(version));
  if (version != kCheckpointVersion)
    throw CorruptCheckpoint("unsupported version " + std::to_string(version), sizeof(kCheckpointMagic));

  const auto payload = bytes.subspan(header, bytes.size() - header - sizeof(std::uint32_t));
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - sizeof(std::uint32_t), sizeof(stored_crc));

  detail::ByteReader r(payload, header);
  NetworkConfig cfg;
  try {
    cfg.stages = r.get<std::uint32_t>("config");
    if (cfg.stages < 2 || cfg.stages > 16) throw CorruptCheckpoint("implausible stage count", header);
    cfg.channels.resize(cfg.stages);
    for (auto& c : cfg.channels) c = r.get<std::uint32_t>("config");
    cfg.cardinality = r.get<std::uint32_t>("config");
    cfg.in_channels = r.get<std::uint32_t>("config");
    cfg.height = r.get<std::uint32_t>("config");
    cfg.width = r.get<std::uint32_t>("config");
    cfg.seed = r.get<std::uint64_t>("config");
  } catch (const CorruptCheckpoint&) {
    if (detail::crc32(payload) != stored_crc)
      throw CorruptCheckpoint("checksum mismatch", bytes.size() - sizeof(std::uint32_t));
    throw;
  }
  if (detail::crc32(payload) != stored_crc)
    throw CorruptCheckpoint("checksum mismatch", bytes.size() - sizeof(std::uint32_t));

  Network net;
  try {
    net = Network(cfg);
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("invalid network config: ") + e.what(), header);
  }
  auto layers = net.layers();
  const auto count = r.get<std::uint32_t>("tensor count");
  if (count != layers.size() * 2)
    throw CorruptCheckpoint("tensor count " + std::to_string(count) + " does not match config", r.offset());
  for (Layer* l : layers) {
    for (const auto& [suffix, t] : {std::pair<const char*, Tensor4*>{".weight", &l->params.weight.values},
                                    {".bias", &l->params.bias.values}}) {
      const std::size_t at = r.offset();
      const std::string name = r.get_string(r.get<std::uint32_t>("name length"));
      if (name != l->spec.name + suffix)
        throw CorruptCheckpoint("unexpected tensor '" + name + "'", at);
      Shape4 s;
      s.n = r.get<std::uint32_t>("dims");
      s.c = r.get<std::uint32_t>("dims");
      s.h = r.get<std::uint32_t>("dims");
      s.w = r.get<std::uint32_t>("dims");
      if (!(s == t->shape())) throw CorruptCheckpoint("tensor '" + name + "' has dims " + s.str(), at);
      r.get_doubles(t->data());
    }
  }
  if (!r.done()) throw CorruptCheckpoint("trailing bytes", r.offset());
  return net;
}

inline void write_checkpoint(const Network& net, const std::string& path) {
  const auto bytes = save_checkpoint(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline Network read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace crispedge
