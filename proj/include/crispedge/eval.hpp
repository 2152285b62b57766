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
#include <cstdio>
#include <filesystem>
#include <iterator>
#include <fstream>
#include <string>
#include <vector>

#include "crispedge/match.hpp"
#include "crispedge/nms.hpp"
#include "crispedge/parallel.hpp"

namespace crispedge {

struct EvalConfig {
  std::size_t thresholds = 99;          // t_k = k / (K + 1), k = 1..K
  std::vector<double> threshold_list;   // explicit grid; overrides `thresholds` when set
  double max_dist_fraction = 0.0075;    // of the image diagonal
  bool apply_nms = false;
  NmsConfig nms;
  std::size_t threads = 1;

  void validate() const {
    if (threshold_list.empty() && thresholds < 1) throw ConfigError("eval: thresholds must be >= 1");
    for (double t : threshold_list)
      if (!std::isfinite(t)) throw ConfigError("eval: threshold values must be finite");
    if (!(max_dist_fraction > 0.0)) throw ConfigError("eval: max_dist_fraction must be > 0");
  }

  std::vector<double> grid() const {
    if (!threshold_list.empty()) return threshold_list;
    std::vector<double> t(thresholds);
    for (std::size_t k = 0; k < thresholds; ++k)
      t[k] = static_cast<double>(k + 1) / static_cast<double>(thresholds + 1);
    return t;
  }
};

struct Prf {
  double precision = 0.0, recall = 0.0, f = 0.0;
};

inline Prf prf(const MatchCounts& c) {
  Prf r;
  r.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

struct ImageDiagnostics {
  bool excluded = false;  // empty ground truth: left out of every aggregate
  std::size_t best_index = 0;
  double best_threshold = 0.0;
  double best_f = 0.0;
  MatchCounts best_counts;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<MatchCounts> counts;  // aggregate per threshold
  std::vector<Prf> curve;
  std::size_t ods_index = 0;
  double ods_threshold = 0.0;
  double ods_f = 0.0;
  Prf ois;
  std::vector<ImageDiagnostics> images;
};

// Per-image counts at each threshold. NMS, when enabled, runs once per image.
inline std::vector<MatchCounts> image_counts(const EdgeMap& p, const GroundTruth& g,
                                             const std::vector<double>& grid, const EvalConfig& cfg) {
  require_same_dims(p, g, "pr_sweep");
  const EdgeMap m = cfg.apply_nms ? nms_thin(p, cfg.nms) : p;
  const double max_dist =
      cfg.max_dist_fraction * std::hypot(static_cast<double>(g.h), static_cast<double>(g.w));
  std::vector<MatchCounts> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = match_boundaries(binarize(m, grid[k]), g, max_dist);
  return out;
}

inline EvalReport pr_sweep(const std::vector<EdgeMap>& preds, const std::vector<GroundTruth>& gts,
                           const EvalConfig& cfg = {}) {
  cfg.validate();
  if (preds.size() != gts.size())
    throw UsageError("pr_sweep: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(gts.size()) + " ground truths");
  if (preds.empty()) throw UsageError("pr_sweep: empty dataset");

  EvalReport r;
  r.thresholds = cfg.grid();
  const std::size_t k_count = r.thresholds.size();
  std::vector<std::vector<MatchCounts>> per(preds.size());
  parallel_for(preds.size(), cfg.threads,
               [&](std::size_t i) { per[i] = image_counts(preds[i], gts[i], r.thresholds, cfg); });

  r.counts.assign(k_count, {});
  r.images.resize(preds.size());
  MatchCounts ois_counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& d = r.images[i];
    if (gts[i].count() == 0) {
      d.excluded = true;
      continue;
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      r.counts[k] += per[i][k];
      const double f = prf(per[i][k]).f;
      if (k == 0 || f > d.best_f) {
        d.best_f = f;
        d.best_index = k;
      }
    }
    d.best_threshold = r.thresholds[d.best_index];
    d.best_counts = per[i][d.best_index];
    ois_counts += d.best_counts;
  }
  r.curve.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    r.curve[k] = prf(r.counts[k]);
    if (k == 0 || r.curve[k].f > r.ods_f) {
      r.ods_f = r.curve[k].f;
      r.ods_index = k;
    }
  }
  r.ods_threshold = r.thresholds[r.ods_index];
  r.ois = prf(ois_counts);
  return r;
}

struct CrispnessReport {
  EvalReport pre;   // raw maps
  EvalReport post;  // thinned maps
  double pre_nms_ods = 0.0;
  double post_nms_ods = 0.0;
  double thickness_ratio = 0.0;
};

inline std::size_t count_at_least(const EdgeMap& p, double t) {
  std::size_t c = 0;
  for (double v : p.values) c += v >= t ? 1 : 0;
  return c;
}

// Pre/post-thinning ODS and how many raw positives stand behind each thinned
// positive at the pre-thinning ODS threshold.
inline CrispnessReport crispness_report(const std::vector<EdgeMap>& preds,
                                        const std::vector<GroundTruth>& gts, EvalConfig cfg = {}) {
  CrispnessReport c;
  cfg.apply_nms = false;
  c.pre = pr_sweep(preds, gts, cfg);
  cfg.apply_nms = true;
  c.post = pr_sweep(preds, gts, cfg);
  c.pre_nms_ods = c.pre.ods_f;
  c.post_nms_ods = c.post.ods_f;

  const double t = c.pre.ods_threshold;
  std::vector<double> ratio(preds.size(), -1.0);
  parallel_for(preds.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t thin = count_at_least(nms_thin(preds[i], cfg.nms), t);
    if (thin > 0) ratio[i] = static_cast<double>(count_at_least(preds[i], t)) / static_cast<double>(thin);
  });
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : ratio)
    if (v >= 0.0) {
      sum += v;
      ++n;
    }
  c.thickness_ratio = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return c;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline std::string pr_csv(const EvalReport& r) {
  std::string s = "threshold,precision,recall,f\n";
  for (std::size_t k = 0; k < r.thresholds.size(); ++k)
    s += detail::fmt("%.10g", r.thresholds[k]) + "," + detail::fmt("%.10g", r.curve[k].precision) + "," +
         detail::fmt("%.10g", r.curve[k].recall) + "," + detail::fmt("%.10g", r.curve[k].f) + "\n";
  return s;
}

struct PrCurve {
  std::string label;
  std::vector<Prf> points;
  std::size_t ods_index = 0;
};

inline PrCurve curve_of(const EvalReport& r, std::string label) {
  return {std::move(label), r.curve, r.ods_index};
}

// Recall on x, precision on y, both over [0, 1]; each curve's ODS point is
// marked and listed in the legend.
inline std::string pr_svg(const std::vector<PrCurve>& curves) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double size = 400.0, pad = 40.0;
  auto px = [&](double v) { return detail::fmt("%.2f", pad + v * size); };
  auto py = [&](double v) { return detail::fmt("%.2f", pad + (1.0 - v) * size); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  s += "<rect x=\"" + px(0) + "\" y=\"" + py(1) + "\" width=\"400\" height=\"400\" fill=\"white\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    s += "<text x=\"" + px(v) + "\" y=\"" + detail::fmt("%.2f", pad + size + 16) +
         "\" font-size=\"10\" text-anchor=\"middle\">" + detail::fmt("%.1f", v) + "</text>\n";
    s += "<text x=\"" + detail::fmt("%.2f", pad - 6) + "\" y=\"" + py(v) +
         "\" font-size=\"10\" text-anchor=\"end\">" + detail::fmt("%.1f", v) + "</text>\n";
  }
  s += "<text x=\"240\" y=\"475\" font-size=\"12\" text-anchor=\"middle\">recall</text>\n";
  s += "<text x=\"12\" y=\"240\" font-size=\"12\" transform=\"rotate(-90 12 240)\" text-anchor=\"middle\">precision</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& cv = curves[c];
    const std::string color = colors[c % std::size(colors)];
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < cv.points.size(); ++k)
      s += (k ? " " : "") + px(cv.points[k].recall) + "," + py(cv.points[k].precision);
    s += "\"/>\n";
    double ods = 0.0;
    if (cv.ods_index < cv.points.size()) {
      const Prf& o = cv.points[cv.ods_index];
      ods = o.f;
      s += "<circle cx=\"" + px(o.recall) + "\" cy=\"" + py(o.precision) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
    }
    s += "<text x=\"" + px(0.03) + "\" y=\"" + detail::fmt("%.2f", pad + size - 12.0 - 16.0 * static_cast<double>(curves.size() - 1 - c)) +
         "\" font-size=\"12\" fill=\"" + color + "\">" + cv.label + " (ODS " + detail::fmt("%.3f", ods) + ")</text>\n";
  }
  s += "</svg>\n";
  return s;
}

inline std::string pr_svg(const EvalReport& r, const std::string& label = "prediction") {
  return pr_svg(std::vector<PrCurve>{curve_of(r, label)});
}

inline std::string report_kv(const EvalReport& r) {
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  kv("ods_f", detail::fmt("%.10g", r.ods_f));
  kv("ods_threshold", detail::fmt("%.10g", r.ods_threshold));
  kv("ods_precision", detail::fmt("%.10g", r.curve.empty() ? 0.0 : r.curve[r.ods_index].precision));
  kv("ods_recall", detail::fmt("%.10g", r.curve.empty() ? 0.0 : r.curve[r.ods_index].recall));
  kv("ois_f", detail::fmt("%.10g", r.ois.f));
  kv("ois_precision", detail::fmt("%.10g", r.ois.precision));
  kv("ois_recall", detail::fmt("%.10g", r.ois.recall));
  kv("thresholds", std::to_string(r.thresholds.size()));
  kv("images", std::to_string(r.images.size()));
  std::size_t excluded = 0;
  for (const auto& d : r.images) excluded += d.excluded ? 1 : 0;
  kv("images_excluded", std::to_string(excluded));
  return s;
}

inline std::string crispness_kv(const CrispnessReport& c) {
  std::string s;
  s += "pre_nms_ods=" + detail::fmt("%.10g", c.pre_nms_ods) + "\n";
  s += "post_nms_ods=" + detail::fmt("%.10g", c.post_nms_ods) + "\n";
  s += "thickness_ratio=" + detail::fmt("%.10g", c.thickness_ratio) + "\n";
  return s;
}

struct PrPaths {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

inline void emit_pr(const EvalReport& r, const PrPaths& paths) {
  if (!paths.csv.empty()) detail::write_text(paths.csv, pr_csv(r));
  if (!paths.svg.empty()) detail::write_text(paths.svg, pr_svg(r));
}

}  // namespace crispedge
