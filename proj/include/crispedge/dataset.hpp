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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crispedge/maps.hpp"
#include "crispedge/netpbm.hpp"
#include "crispedge/tensor.hpp"

namespace crispedge {

struct Sample {
  std::string id;
  Tensor4 image;  // 1 x C x H x W, values in [0, 1]
  GroundTruth annotation;

  void validate() const {
    if (image.n() != 1 || image.h() != annotation.h || image.w() != annotation.w)
      throw UsageError("sample '" + id + "': image " + image.shape().str() + " and annotation " +
                       std::to_string(annotation.h) + "x" + std::to_string(annotation.w) +
                       " disagree");
  }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct ManifestEntry {
  std::string image;
  std::string annotation;
};

// "image-path TAB annotation-path" per line; blank lines and '#' comments are
// skipped; relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest '" + path + "'");
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return (q.is_absolute() ? q : dir / q).string();
  };
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(f, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t', first);
    if (tab == std::string::npos || tab + 1 >= line.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'image<TAB>annotation'");
    out.push_back({resolve(line.substr(first, tab - first)), resolve(line.substr(tab + 1))});
  }
  return out;
}

inline std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline std::vector<Sample> load_dataset(const std::string& manifest) {
  std::vector<Sample> out;
  for (const auto& e : load_manifest(manifest)) {
    Sample s{stem_of(e.image), load_image(e.image), load_annotation(e.annotation)};
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

// Writes images/{id}.pgm|ppm, labels/{id}.pgm and manifest.txt under dir.
inline std::string write_dataset(const std::string& dir, const std::vector<Sample>& samples) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  fs::create_directories(fs::path(dir) / "labels", ec);
  if (ec) throw IoError("cannot create dataset directory '" + dir + "': " + ec.message());
  const std::string manifest = (fs::path(dir) / "manifest.txt").string();
  std::ofstream m(manifest);
  if (!m) throw IoError("cannot write '" + manifest + "'");
  for (const auto& s : samples) {
    const std::string img = "images/" + s.id + (s.image.c() == 3 ? ".ppm" : ".pgm");
    const std::string lab = "labels/" + s.id + ".pgm";
    save_image((fs::path(dir) / img).string(), s.image);
    save_annotation((fs::path(dir) / lab).string(), s.annotation);
    m << img << '\t' << lab << '\n';
  }
  return manifest;
}

// One sample per annotation, all sharing the image.
inline std::vector<Sample> expand_annotations(const std::string& id, const Tensor4& image,
                                              const std::vector<GroundTruth>& annotations) {
  std::vector<Sample> out;
  out.reserve(annotations.size());
  for (std::size_t j = 0; j < annotations.size(); ++j) {
    Sample s{annotations.size() == 1 ? id : id + "_a" + std::to_string(j), image, annotations[j]};
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace crispedge
