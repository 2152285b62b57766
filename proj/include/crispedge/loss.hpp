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
#include <string>
#include <utility>
#include <vector>

#include "crispedge/maps.hpp"

namespace crispedge {

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d(value)/d(p_k), same layout as the edge map
};

// Class-balanced cross-entropy. beta = |Y-| / |Y| is recomputed per map.
inline LossResult weighted_ce(const EdgeMap& p, const GroundTruth& g) {
  require_same_dims(p, g, "weighted_ce");
  const double n = static_cast<double>(g.size());
  const double beta = n > 0 ? static_cast<double>(g.size() - g.count()) / n : 1.0;
  LossResult r{0.0, std::vector<double>(p.size(), 0.0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]) {
      r.value -= beta * std::log(p[i]);
      r.grad[i] = -beta / p[i];
    } else {
      r.value -= (1.0 - beta) * std::log(1.0 - p[i]);
      r.grad[i] = (1.0 - beta) / (1.0 - p[i]);
    }
  }
  return r;
}

// Reciprocal soft Dice: (sum p^2 + sum g^2 + eps) / (2 sum pg + eps).
inline LossResult dice_loss(const EdgeMap& p, const GroundTruth& g, double epsilon) {
  require_same_dims(p, g, "dice_loss");
  if (!(epsilon >= 0.0)) throw ConfigError("dice_loss: epsilon must be non-negative");
  double pp = 0.0, gg = 0.0, pg = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pp += p[i] * p[i];
    gg += g[i];
    pg += p[i] * g[i];
  }
  const double num = pp + gg + epsilon;
  const double den = 2.0 * pg + epsilon;
  if (den == 0.0) throw NumericError("dice_loss: zero denominator (empty GT with epsilon = 0)");
  LossResult r{num / den, std::vector<double>(p.size())};
  const double den2 = den * den;
  for (std::size_t i = 0; i < p.size(); ++i)
    r.grad[i] = (2.0 * p[i] * den - 2.0 * g[i] * num) / den2;
  return r;
}

// Fusion cross-entropy variant:
// -sum(g log p + (1 - g)(1 - log p)). Its derivative is -(2g - 1) / p. Unlike
// standard BCE the value can be negative.
inline LossResult paper_ce(const EdgeMap& p, const GroundTruth& g) {
  require_same_dims(p, g, "paper_ce");
  LossResult r{0.0, std::vector<double>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lp = std::log(p[i]);
    const double gi = g[i];
    r.value -= gi * lp + (1.0 - gi) * (1.0 - lp);
    r.grad[i] = -(2.0 * gi - 1.0) / p[i];
  }
  return r;
}

// Standard unweighted binary cross-entropy.
inline LossResult standard_bce(const EdgeMap& p, const GroundTruth& g) {
  require_same_dims(p, g, "standard_bce");
  LossResult r{0.0, std::vector<double>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]) {
      r.value -= std::log(p[i]);
      r.grad[i] = -1.0 / p[i];
    } else {
      r.value -= std::log(1.0 - p[i]);
      r.grad[i] = 1.0 / (1.0 - p[i]);
    }
  }
  return r;
}

// Which cross-entropy is paired with the Dice term.
enum class CeVariant { kPaper, kStandard, kWeighted };

struct FusionConfig {
  double alpha = 1.0;
  double beta_fuse = 0.001;
  double epsilon = 1.0;
  CeVariant ce = CeVariant::kPaper;

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(beta_fuse >= 0.0)) throw ConfigError("beta_fuse must be >= 0");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (!(alpha + beta_fuse > 0.0)) throw ConfigError("alpha + beta_fuse must be > 0");
  }
};

inline LossResult ce_term(const EdgeMap& p, const GroundTruth& g, CeVariant v) {
  switch (v) {
    case CeVariant::kPaper: return paper_ce(p, g);
    case CeVariant::kStandard: return standard_bce(p, g);
    case CeVariant::kWeighted: return weighted_ce(p, g);
  }
  return paper_ce(p, g);
}

// alpha * dice + beta_fuse * ce, gradient combined with the same weights.
inline LossResult fusion_loss(const EdgeMap& p, const GroundTruth& g, const FusionConfig& cfg) {
  cfg.validate();
  LossResult d = dice_loss(p, g, cfg.epsilon);
  LossResult c = ce_term(p, g, cfg.ce);
  LossResult r{cfg.alpha * d.value + cfg.beta_fuse * c.value, std::vector<double>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i)
    r.grad[i] = cfg.alpha * d.grad[i] + cfg.beta_fuse * c.grad[i];
  return r;
}

enum class LossKind { kFusion, kWeightedCe, kDice, kPaperCe, kBce };

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "fusion") return LossKind::kFusion;
  if (s == "weighted-ce") return LossKind::kWeightedCe;
  if (s == "dice") return LossKind::kDice;
  if (s == "paper-ce") return LossKind::kPaperCe;
  if (s == "bce") return LossKind::kBce;
  throw ConfigError("unknown loss '" + s + "' (expected fusion|weighted-ce|dice|paper-ce|bce)");
}

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kFusion: return "fusion";
    case LossKind::kWeightedCe: return "weighted-ce";
    case LossKind::kDice: return "dice";
    case LossKind::kPaperCe: return "paper-ce";
    case LossKind::kBce: return "bce";
  }
  return "?";
}

// Training objective selector; fusion parameters apply to kFusion and kDice.
struct LossConfig {
  LossKind kind = LossKind::kFusion;
  FusionConfig fusion;

  LossResult operator()(const EdgeMap& p, const GroundTruth& g) const {
    switch (kind) {
      case LossKind::kFusion: return fusion_loss(p, g, fusion);
      case LossKind::kWeightedCe: return weighted_ce(p, g);
      case LossKind::kDice: return dice_loss(p, g, fusion.epsilon);
      case LossKind::kPaperCe: return paper_ce(p, g);
      case LossKind::kBce: return standard_bce(p, g);
    }
    return fusion_loss(p, g, fusion);
  }
};

struct BatchLoss {
  double total = 0.0;
  std::vector<LossResult> per_pair;
};

// Mini-batch objective: plain sum of per-pair losses.
inline BatchLoss batch_loss(const std::vector<std::pair<EdgeMap, GroundTruth>>& pairs,
                            const LossConfig& cfg) {
  if (pairs.empty()) throw UsageError("batch_loss: empty batch");
  BatchLoss b;
  b.per_pair.reserve(pairs.size());
  for (const auto& [p, g] : pairs) {
    b.per_pair.push_back(cfg(p, g));
    b.total += b.per_pair.back().value;
  }
  return b;
}

inline BatchLoss batch_loss(const std::vector<std::pair<EdgeMap, GroundTruth>>& pairs,
                            const FusionConfig& cfg) {
  return batch_loss(pairs, LossConfig{LossKind::kFusion, cfg});
}

}  // namespace crispedge
