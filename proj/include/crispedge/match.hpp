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
#include <cmath>
#include <tuple>
#include <vector>

#include "crispedge/maps.hpp"

namespace crispedge {

using BinaryMask = GroundTruth;

struct MatchCounts {
  std::size_t tp = 0;  // matched predicted pixels
  std::size_t fp = 0;  // unmatched predicted pixels
  std::size_t fn = 0;  // unmatched ground-truth pixels

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

inline BinaryMask binarize(const EdgeMap& p, double threshold) {
  BinaryMask m(p.h, p.w);
  for (std::size_t i = 0; i < p.size(); ++i) m.labels[i] = p[i] >= threshold ? 1 : 0;
  return m;
}

// One-to-one matching of predicted to ground-truth pixels within Euclidean
// distance max_dist, greedy in ascending distance. Among equally distant
// pairs, those whose endpoints have fewer in-range alternatives go first; the
// remaining ties are ordered by the unordered pixel pair. Every key is
// symmetric, so swapping the two masks leaves tp unchanged.
inline MatchCounts match_boundaries(const BinaryMask& pred, const GroundTruth& gt, double max_dist) {
  if (pred.h != gt.h || pred.w != gt.w) throw UsageError("match_boundaries: mask dims differ");
  if (!(max_dist > 0.0)) throw UsageError("match_boundaries: max_dist must be > 0");
  const long h = static_cast<long>(gt.h), w = static_cast<long>(gt.w);
  const long r = static_cast<long>(std::floor(max_dist));
  const double max_d2 = max_dist * max_dist;

  struct Cand {
    long d2;
    std::size_t deg, lo, hi, p, g;
  };
  std::vector<Cand> cands;
  std::size_t n_pred = 0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const auto pi = static_cast<std::size_t>(y * w + x);
      if (!pred.labels[pi]) continue;
      ++n_pred;
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) {
          const long gy = y + dy, gx = x + dx;
          if (gy < 0 || gx < 0 || gy >= h || gx >= w) continue;
          const long d2 = dy * dy + dx * dx;
          if (static_cast<double>(d2) > max_d2) continue;
          const auto gi = static_cast<std::size_t>(gy * w + gx);
          if (gt.labels[gi]) cands.push_back({d2, 0, std::min(pi, gi), std::max(pi, gi), pi, gi});
        }
    }
  std::vector<std::size_t> pred_deg(pred.size(), 0), gt_deg(gt.size(), 0);
  for (const auto& c : cands) ++pred_deg[c.p], ++gt_deg[c.g];
  for (auto& c : cands) c.deg = pred_deg[c.p] + gt_deg[c.g];
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.d2, a.deg, a.lo, a.hi, a.p) < std::tie(b.d2, b.deg, b.lo, b.hi, b.p);
  });
  std::vector<std::uint8_t> pred_used(pred.size(), 0), gt_used(gt.size(), 0);
  MatchCounts m;
  for (const auto& c : cands) {
    if (pred_used[c.p] || gt_used[c.g]) continue;
    pred_used[c.p] = gt_used[c.g] = 1;
    ++m.tp;
  }
  m.fp = n_pred - m.tp;
  m.fn = gt.count() - m.tp;
  return m;
}

}  // namespace crispedge
