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

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crispedge/augment.hpp"
#include "crispedge/checkpoint.hpp"
#include "crispedge/eval.hpp"
#include "crispedge/experiment.hpp"
#include "crispedge/netpbm.hpp"
#include "crispedge/synth.hpp"
#include "crispedge/train.hpp"

namespace crispedge::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumeric = 4 };

// Everything a run needs, loaded from a flat key=value file. Relative paths
// resolve against the file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  NetworkConfig network;
  LossConfig loss{LossKind::kFusion, FusionConfig{1.0, 0.001, 1.0, CeVariant::kStandard}};
  AdamConfig adam;
  std::size_t epochs = 40;
  std::size_t batch_size = 4;
  std::string train_manifest;
  std::string test_manifest;
  std::string output_dir = "run";
  EvalConfig eval;
  SynthSpec synth;
  std::size_t ab_images = 50;
  std::size_t ab_train_images = 40;
  std::vector<std::uint64_t> ab_seeds{1, 2, 3, 4, 5};

  TrainConfig train_config() const {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.loss = loss;
    t.adam = adam;
    t.seed = seed;
    return t;
  }

  NetworkConfig network_config() const {
    NetworkConfig n = network;
    n.seed = seed;
    return n;
  }

  AbConfig ab_config() const {
    AbConfig a;
    a.data = synth;
    a.data.height = network.height;
    a.data.width = network.width;
    a.images = ab_images;
    a.train_images = ab_train_images;
    a.network = network;
    a.train = train_config();
    a.fusion = loss.fusion;
    a.eval = eval;
    return a;
  }

  void validate() const {
    network.validate();
    train_config().validate();
    eval.validate();
    synth.validate();
    if (ab_seeds.empty()) throw ConfigError("ab_seeds must not be empty");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  std::istringstream in(v);
  in >> out;
  if (!in || !in.eof()) throw ConfigError("bad value for '" + key + "': '" + v + "'");
  if constexpr (std::is_unsigned_v<T>)
    if (!v.empty() && v[0] == '-') throw ConfigError("'" + key + "' must be non-negative");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + v + "'");
}

inline CeVariant parse_ce(const std::string& v) {
  if (v == "paper") return CeVariant::kPaper;
  if (v == "standard") return CeVariant::kStandard;
  if (v == "weighted") return CeVariant::kWeighted;
  throw ConfigError("bad value for 'ce': '" + v + "' (expected paper|standard|weighted)");
}

inline const char* ce_name(CeVariant c) {
  switch (c) {
    case CeVariant::kPaper: return "paper";
    case CeVariant::kStandard: return "standard";
    case CeVariant::kWeighted: return "weighted";
  }
  return "standard";
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace detail

// Applies one key=value assignment. Dashes in keys are read as underscores.
inline void set_key(RunConfig& c, std::string key, const std::string& v, const fs::path& base = {}) {
  using detail::parse_number;
  std::replace(key.begin(), key.end(), '-', '_');
  auto path = [&](const std::string& p) {
    return p.empty() || fs::path(p).is_absolute() || base.empty() ? p : (base / p).string();
  };
  if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "stages") c.network.stages = parse_number<std::size_t>(key, v);
  else if (key == "channels") {
    c.network.channels.clear();
    for (const auto& x : detail::split(v, ',')) c.network.channels.push_back(parse_number<std::size_t>(key, x));
  } else if (key == "cardinality") c.network.cardinality = parse_number<std::size_t>(key, v);
  else if (key == "in_channels") c.network.in_channels = parse_number<std::size_t>(key, v);
  else if (key == "height") c.network.height = parse_number<std::size_t>(key, v);
  else if (key == "width") c.network.width = parse_number<std::size_t>(key, v);
  else if (key == "loss") {
    try {
      c.loss.kind = parse_loss_kind(v);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "alpha") c.loss.fusion.alpha = parse_number<double>(key, v);
  else if (key == "beta_fuse") c.loss.fusion.beta_fuse = parse_number<double>(key, v);
  else if (key == "epsilon") c.loss.fusion.epsilon = parse_number<double>(key, v);
  else if (key == "ce") c.loss.fusion.ce = detail::parse_ce(v);
  else if (key == "lr") c.adam.lr = parse_number<double>(key, v);
  else if (key == "weight_decay") c.adam.weight_decay = parse_number<double>(key, v);
  else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, v);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, v);
  else if (key == "train_manifest") c.train_manifest = path(v);
  else if (key == "test_manifest") c.test_manifest = path(v);
  else if (key == "output_dir") c.output_dir = path(v);
  else if (key == "thresholds") c.eval.thresholds = parse_number<std::size_t>(key, v);
  else if (key == "max_dist_fraction") c.eval.max_dist_fraction = parse_number<double>(key, v);
  else if (key == "apply_nms") c.eval.apply_nms = detail::parse_bool(key, v);
  else if (key == "synth_min_shapes") c.synth.min_shapes = parse_number<std::size_t>(key, v);
  else if (key == "synth_max_shapes") c.synth.max_shapes = parse_number<std::size_t>(key, v);
  else if (key == "synth_noise") c.synth.noise_sigma = parse_number<double>(key, v);
  else if (key == "synth_blur") c.synth.blur_sigma = parse_number<double>(key, v);
  else if (key == "synth_annotators") c.synth.annotators = parse_number<std::size_t>(key, v);
  else if (key == "synth_jitter") c.synth.annotator_jitter = parse_number<double>(key, v);
  else if (key == "ab_images") c.ab_images = parse_number<std::size_t>(key, v);
  else if (key == "ab_train_images") c.ab_train_images = parse_number<std::size_t>(key, v);
  else if (key == "ab_seeds") {
    c.ab_seeds.clear();
    for (const auto& x : detail::split(v, ',')) c.ab_seeds.push_back(parse_number<std::uint64_t>(key, x));
  } else
    throw ConfigError("unknown key '" + key + "'");
}

inline RunConfig parse_run_config(const std::string& text, const fs::path& base = {},
                                  const std::string& origin = "config") {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set_key(c, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)), base);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path(), path);
}

// Every key with its effective value; parse_run_config reads it back.
inline std::string to_text(const RunConfig& c) {
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  kv("seed", std::to_string(c.seed));
  kv("stages", std::to_string(c.network.stages));
  kv("channels", detail::join(c.network.channels));
  kv("cardinality", std::to_string(c.network.cardinality));
  kv("in_channels", std::to_string(c.network.in_channels));
  kv("height", std::to_string(c.network.height));
  kv("width", std::to_string(c.network.width));
  kv("loss", to_string(c.loss.kind));
  kv("alpha", detail::num(c.loss.fusion.alpha));
  kv("beta_fuse", detail::num(c.loss.fusion.beta_fuse));
  kv("epsilon", detail::num(c.loss.fusion.epsilon));
  kv("ce", detail::ce_name(c.loss.fusion.ce));
  kv("lr", detail::num(c.adam.lr));
  kv("weight_decay", detail::num(c.adam.weight_decay));
  kv("epochs", std::to_string(c.epochs));
  kv("batch_size", std::to_string(c.batch_size));
  if (!c.train_manifest.empty()) kv("train_manifest", c.train_manifest);
  if (!c.test_manifest.empty()) kv("test_manifest", c.test_manifest);
  kv("output_dir", c.output_dir);
  kv("thresholds", std::to_string(c.eval.thresholds));
  kv("max_dist_fraction", detail::num(c.eval.max_dist_fraction));
  kv("apply_nms", c.eval.apply_nms ? "true" : "false");
  kv("synth_min_shapes", std::to_string(c.synth.min_shapes));
  kv("synth_max_shapes", std::to_string(c.synth.max_shapes));
  kv("synth_noise", detail::num(c.synth.noise_sigma));
  kv("synth_blur", detail::num(c.synth.blur_sigma));
  kv("synth_annotators", std::to_string(c.synth.annotators));
  kv("synth_jitter", detail::num(c.synth.annotator_jitter));
  kv("ab_images", std::to_string(c.ab_images));
  kv("ab_train_images", std::to_string(c.ab_train_images));
  kv("ab_seeds", detail::join(c.ab_seeds));
  return s;
}

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string(what) + " not given");
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

// Top-left crop to the largest size the network accepts.
inline TrainPair fit_to_divisor(const Sample& s, std::size_t d) {
  const std::size_t h = s.image.h() / d * d, w = s.image.w() / d * d;
  if (h == 0 || w == 0) throw UsageError("sample '" + s.id + "' is smaller than " + std::to_string(d) + " px");
  if (h == s.image.h() && w == s.image.w()) return {s.image, s.annotation};
  TrainPair p{Tensor4(1, s.image.c(), h, w), GroundTruth(h, w)};
  for (std::size_t c = 0; c < s.image.c(); ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) p.image(0, c, y, x) = s.image(0, c, y, x);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) p.gt.at(y, x) = s.annotation.at(y, x);
  return p;
}

// Single-scale prediction at any size: the image is edge-padded up to the
// network divisor and the result cropped back.
inline EdgeMap predict_any(const Network& net, const Tensor4& image) {
  const std::size_t d = net.config().divisor();
  const std::size_t h = image.h(), w = image.w();
  const std::size_t ph = (h + d - 1) / d * d, pw = (w + d - 1) / d * d;
  if (ph == h && pw == w) return predict(net, image);
  Tensor4 padded(1, image.c(), ph, pw);
  for (std::size_t c = 0; c < image.c(); ++c)
    for (std::size_t y = 0; y < ph; ++y)
      for (std::size_t x = 0; x < pw; ++x) padded(0, c, y, x) = image(0, c, std::min(y, h - 1), std::min(x, w - 1));
  const EdgeMap full = predict(net, padded);
  EdgeMap out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out.at(y, x) = full.at(y, x);
  return out;
}

inline void write_file(const fs::path& p, const std::string& text) { crispedge::detail::write_text(p, text); }

inline std::vector<PrCurve> read_pr_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || trim(line) != "threshold,precision,recall,f")
    throw ParseError(path + ":1: expected header 'threshold,precision,recall,f'");
  PrCurve c;
  c.label = fs::path(path).parent_path().filename().string();
  if (c.label.empty()) c.label = fs::path(path).stem().string();
  for (std::size_t lineno = 2; std::getline(f, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 columns");
    Prf p;
    try {
      p.precision = std::stod(cells[1]);
      p.recall = std::stod(cells[2]);
      p.f = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    if (c.points.empty() || p.f > c.points[c.ods_index].f) c.ods_index = c.points.size();
    c.points.push_back(p);
  }
  return {c};
}

}  // namespace detail

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline void cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::size_t n, Streams io) {
  SynthSpec spec = cfg.synth;
  spec.height = cfg.network.height;
  spec.width = cfg.network.width;
  spec.seed = cfg.seed;
  if (n == 0) throw UsageError("synth: count must be >= 1");
  // With simulated annotators every image is listed once per annotator.
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i)
    for (auto& s : synth_annotated(spec, i)) samples.push_back(std::move(s));
  const std::string manifest = write_dataset(out_dir, samples);
  io.out << "synth: wrote " << samples.size() << " samples (" << spec.height << "x" << spec.width << ") to "
         << manifest << "\n";
}

inline void cmd_augment(const RunConfig& cfg, const std::string& manifest, const std::string& out_dir,
                        const AugmentSpec& aug_in, std::size_t threads, Streams io) {
  detail::require_file(manifest, "manifest");
  AugmentSpec aug = aug_in;
  aug.seed = cfg.seed;
  const auto base = load_dataset(manifest);
  const auto r = augment_all(base, aug, threads);
  const std::string out = write_dataset(out_dir, r.samples);
  io.out << "augment: " << base.size() << " samples -> " << r.samples.size() << " variants, " << r.dropped
         << " dropped (crop under " << aug.min_crop << " px); manifest " << out << "\n";
}

inline void cmd_train(const RunConfig& cfg, const std::string& checkpoint, Streams io) {
  detail::require_file(cfg.train_manifest, "train manifest");
  const auto samples = load_dataset(cfg.train_manifest);
  Network net = build(cfg.network_config());
  std::vector<TrainPair> data;
  for (const auto& s : samples) {
    if (s.image.c() != cfg.network.in_channels)
      throw UsageError("sample '" + s.id + "' has " + std::to_string(s.image.c()) + " channels, config expects " +
                       std::to_string(cfg.network.in_channels));
    data.push_back(detail::fit_to_divisor(s, cfg.network.divisor()));
  }
  std::string log = "epoch,loss\n";
  const auto history = train(net, data, cfg.train_config(), [&](std::size_t epoch, double l) {
    log += std::to_string(epoch + 1) + "," + detail::num(l) + "\n";
  });
  const fs::path ckpt(checkpoint);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  write_checkpoint(net, checkpoint);
  detail::write_file(fs::path(checkpoint + ".loss.csv"), log);
  detail::write_file(fs::path(checkpoint + ".cfg"), to_text(cfg));
  char buf[160];
  std::snprintf(buf, sizeof buf, "train: %zu samples, %zu epochs, loss %.6g -> %.6g; checkpoint %s\n",
                data.size(), history.size(), history.front(), history.back(), checkpoint.c_str());
  io.out << buf;
}

inline void cmd_predict(const std::string& checkpoint, const std::vector<std::string>& images,
                        const std::string& out_dir, bool multiscale, Streams io) {
  detail::require_file(checkpoint, "checkpoint");
  const Network net = read_checkpoint(checkpoint);
  fs::create_directories(out_dir);
  for (const auto& path : images) {
    const Tensor4 img = load_image(path);
    const EdgeMap p = multiscale ? multiscale_predict(net, img) : detail::predict_any(net, img);
    save_prediction((fs::path(out_dir) / (stem_of(path) + ".pgm")).string(), p);
  }
  io.out << "predict: " << images.size() << " edge maps" << (multiscale ? " (multi-scale)" : "") << " written to "
         << out_dir << "\n";
}

struct EvalOptions {
  bool crispness = false;
};

inline void cmd_eval(const RunConfig& cfg, const std::string& pred_dir, const std::string& gt_manifest,
                     const std::string& out_dir, const EvalOptions& opt, std::size_t threads, Streams io) {
  detail::require_file(gt_manifest, "ground-truth manifest");
  if (!fs::is_directory(pred_dir)) throw UsageError("prediction directory not found: " + pred_dir);
  std::vector<EdgeMap> preds;
  std::vector<GroundTruth> gts;
  std::vector<std::string> ids;
  for (const auto& e : load_manifest(gt_manifest)) {
    const std::string id = stem_of(e.image);
    const fs::path p = fs::path(pred_dir) / (id + ".pgm");
    if (!fs::exists(p)) throw IoError("missing prediction for '" + id + "': " + p.string());
    preds.push_back(load_prediction(p.string()));
    gts.push_back(load_annotation(e.annotation));
    require_same_dims(preds.back(), gts.back(), id.c_str());
    ids.push_back(id);
  }
  EvalConfig ec = cfg.eval;
  ec.threads = threads;
  const EvalReport r = pr_sweep(preds, gts, ec);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  detail::write_file(dir / "report.txt", report_kv(r));
  emit_pr(r, {dir / "pr.csv", dir / "pr.svg"});
  std::string per = "id,excluded,best_threshold,best_f,tp,fp,fn\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& d = r.images[i];
    per += ids[i] + "," + (d.excluded ? "1" : "0") + "," + detail::num(d.best_threshold) + "," +
           detail::num(d.best_f) + "," + std::to_string(d.best_counts.tp) + "," + std::to_string(d.best_counts.fp) +
           "," + std::to_string(d.best_counts.fn) + "\n";
  }
  detail::write_file(dir / "per_image.csv", per);
  char buf[200];
  std::snprintf(buf, sizeof buf, "eval: %zu images%s, ODS %.4f (t=%.3f), OIS %.4f\n", ids.size(),
                ec.apply_nms ? " (thinned)" : "", r.ods_f, r.ods_threshold, r.ois.f);
  io.out << buf;
  if (opt.crispness) {
    const CrispnessReport c = crispness_report(preds, gts, ec);
    detail::write_file(dir / "crispness.txt", crispness_kv(c));
    std::snprintf(buf, sizeof buf, "eval: pre-NMS ODS %.4f, post-NMS ODS %.4f, thickness ratio %.3f\n",
                  c.pre_nms_ods, c.post_nms_ods, c.thickness_ratio);
    io.out << buf;
  }
}

inline std::vector<AbResult> cmd_ab(const RunConfig& cfg, const std::string& out_dir, std::size_t threads, Streams io) {
  AbConfig ab = cfg.ab_config();
  ab.eval.threads = threads;
  std::vector<AbResult> results;
  std::size_t wins = 0;
  for (std::uint64_t seed : cfg.ab_seeds) {
    results.push_back(run_ab(ab, seed));
    const auto& r = results.back();
    const bool win = r.fusion_sharper_pre_nms() && r.fusion_thinner();
    wins += win ? 1 : 0;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "ab seed %llu: weighted-ce pre %.4f post %.4f thick %.3f | fusion pre %.4f post %.4f thick %.3f%s\n",
                  static_cast<unsigned long long>(seed), r.weighted.pre_nms_ods, r.weighted.post_nms_ods,
                  r.weighted.thickness_ratio, r.fusion.pre_nms_ods, r.fusion.post_nms_ods, r.fusion.thickness_ratio,
                  win ? "  [fusion crisper]" : "");
    io.out << buf << std::flush;
  }
  fs::create_directories(out_dir);
  detail::write_file(fs::path(out_dir) / "ab.csv", ab_table(results));
  detail::write_file(fs::path(out_dir) / "ab.cfg", to_text(cfg));
  io.out << "ab: fusion crisper on " << wins << " of " << results.size() << " seeds; table "
         << (fs::path(out_dir) / "ab.csv").string() << "\n";
  return results;
}

inline void cmd_plot(const std::vector<std::string>& csvs, const std::string& out, Streams io) {
  std::vector<PrCurve> curves;
  for (const auto& p : csvs) {
    auto c = detail::read_pr_csv(p);
    curves.insert(curves.end(), c.begin(), c.end());
  }
  detail::write_file(out, pr_svg(curves));
  io.out << "plot: " << curves.size() << " curve(s) -> " << out << "\n";
}

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Streams io{out, err};
  CLI::App app{"crispedge: crisp boundary detection with a Dice/cross-entropy fusion loss"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "key=value run configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed; overrides the config");
  app.add_option("--threads", threads, "Worker threads for eval and augment")->check(CLI::Range(1, 256));

  std::string out_dir, manifest, checkpoint, pred_dir;
  std::vector<std::string> files;
  std::size_t n = 50, scales = 1, min_crop = 16;
  bool no_flip = false, multiscale = false, crispness = false, nms = false;
  std::size_t thresholds = 0;
  double max_dist_fraction = 0.0;
  std::string seeds_csv;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic boundary dataset");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("-n,--count", n, "Number of samples")->check(CLI::PositiveNumber);

  auto* augment = app.add_subcommand("augment", "Scale, rotate, crop and flip a dataset");
  augment->add_option("--manifest", manifest, "Input manifest")->required();
  augment->add_option("--out", out_dir, "Output directory")->required();
  augment->add_option("--scales", scales, "Random scales per sample")->check(CLI::PositiveNumber);
  augment->add_option("--min-crop", min_crop, "Drop variants smaller than this");
  augment->add_flag("--no-flip", no_flip, "Skip horizontal flips");

  auto* trainc = app.add_subcommand("train", "Train a network; writes checkpoint, loss log and effective config");
  trainc->add_option("--train-manifest", manifest, "Training manifest (overrides the config)");
  trainc->add_option("--out", checkpoint, "Checkpoint path (default <output_dir>/model.ckpt)");

  auto* predictc = app.add_subcommand("predict", "Write 16-bit edge maps for images");
  predictc->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  predictc->add_option("--manifest", manifest, "Predict every image in this manifest");
  predictc->add_option("images", files, "Image files");
  predictc->add_option("--out", out_dir, "Output directory")->required();
  predictc->add_flag("--multiscale", multiscale, "Average over 0.5x, 1x and 1.5x inputs");

  auto* evalc = app.add_subcommand("eval", "Precision/recall sweep with ODS and OIS");
  evalc->add_option("--pred", pred_dir, "Directory of predicted edge maps")->required();
  evalc->add_option("--manifest", manifest, "Ground-truth manifest")->required();
  evalc->add_option("--out", out_dir, "Report directory")->required();
  evalc->add_flag("--nms", nms, "Thin predictions before matching");
  evalc->add_flag("--crispness", crispness, "Also report pre/post-thinning ODS and thickness ratio");
  evalc->add_option("--thresholds", thresholds, "Threshold count K")->check(CLI::PositiveNumber);
  evalc->add_option("--max-dist-fraction", max_dist_fraction, "Match tolerance as a fraction of the diagonal")
      ->check(CLI::PositiveNumber);

  auto* abc = app.add_subcommand("ab", "Weighted-CE vs fusion-loss crispness experiment");
  abc->add_option("--out", out_dir, "Output directory (default <output_dir>/ab)");
  abc->add_option("--seeds", seeds_csv, "Comma-separated seeds (overrides ab_seeds)");

  auto* plot = app.add_subcommand("plot", "Overlay PR curves from pr.csv files into one SVG");
  plot->add_option("csv", files, "pr.csv files")->required();
  plot->add_option("--out", out_dir, "Output SVG path")->required();

  for (auto* sub : {synth, augment, trainc, predictc, evalc, abc, plot}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (!seeds_csv.empty()) set_key(cfg, "ab_seeds", seeds_csv);
    if (thresholds > 0) cfg.eval.thresholds = thresholds;
    if (max_dist_fraction > 0.0) cfg.eval.max_dist_fraction = max_dist_fraction;
    if (nms) cfg.eval.apply_nms = true;
    cfg.validate();

    if (*synth) {
      cmd_synth(cfg, out_dir, n, io);
    } else if (*augment) {
      AugmentSpec aug;
      aug.scales_per_sample = scales;
      aug.flips = !no_flip;
      aug.min_crop = min_crop;
      cmd_augment(cfg, manifest, out_dir, aug, threads, io);
    } else if (*trainc) {
      if (!manifest.empty()) cfg.train_manifest = manifest;
      cmd_train(cfg, checkpoint.empty() ? (fs::path(cfg.output_dir) / "model.ckpt").string() : checkpoint, io);
    } else if (*predictc) {
      std::vector<std::string> images = files;
      if (!manifest.empty()) {
        detail::require_file(manifest, "manifest");
        for (const auto& e : load_manifest(manifest)) images.push_back(e.image);
      }
      if (images.empty()) throw UsageError("predict: no images given");
      cmd_predict(checkpoint, images, out_dir, multiscale, io);
    } else if (*evalc) {
      cmd_eval(cfg, pred_dir, manifest, out_dir, {crispness}, threads, io);
    } else if (*abc) {
      cmd_ab(cfg, out_dir.empty() ? (fs::path(cfg.output_dir) / "ab").string() : out_dir, threads, io);
    } else if (*plot) {
      cmd_plot(files, out_dir, io);
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace crispedge::cli
