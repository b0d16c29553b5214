// Copyright 2026 The Boundiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "boundiff/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "boundiff/error.h"

namespace boundiff {
namespace {

// Absorbs representation error in tau * L (e.g. 0.05 * 100).
constexpr double kWindowSlack = 1e-9;

void require_nonempty(const std::vector<BoundarySet>& sets, const char* what) {
  if (sets.empty()) throw ArgumentError(std::string(what) + " must not be empty");
}

double best_against(const BoundarySet& x, const std::vector<BoundarySet>& others, double tau) {
  double best = 0.0;
  for (const BoundarySet& o : others) best = std::max(best, f1_reldis(x, o, tau));
  return best;
}

double mean_pairwise_distance(const std::vector<BoundarySet>& a, const std::vector<BoundarySet>& b,
                              double tau) {
  double total = 0.0;
  for (const BoundarySet& x : a) {
    for (const BoundarySet& y : b) total += 1.0 - f1_reldis(x, y, tau);
  }
  return total / static_cast<double>(a.size() * b.size());
}

}  // namespace

BoundarySet::BoundarySet(std::vector<int> frames, int L) : frames_(std::move(frames)), L_(L) {
  if (L_ < 1) throw ArgumentError("boundary set needs L >= 1");
  for (size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i] < 0 || frames_[i] >= L_) {
      throw ArgumentError("boundary frame " + std::to_string(frames_[i]) + " outside [0, " +
                          std::to_string(L_) + ")");
    }
    if (i > 0 && frames_[i] <= frames_[i - 1]) {
      throw ArgumentError("boundary frames must be strictly increasing");
    }
  }
}

BoundarySet BoundarySet::from_unsorted(std::vector<int> frames, int L) {
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return BoundarySet(std::move(frames), L);
}

std::vector<double> EvalConfig::effective_thresholds() const {
  if (!thresholds.empty()) return thresholds;
  return {rel_dis};
}

std::vector<double> rel_dis_sweep() {
  std::vector<double> out;
  for (int k = 1; k <= 10; ++k) out.push_back(0.05 * k);
  return out;
}

int match_boundaries(const BoundarySet& pred, const BoundarySet& gt, double tau) {
  if (pred.L() != gt.L()) {
    throw ArgumentError("match_boundaries: L mismatch (" + std::to_string(pred.L()) + " vs " +
                        std::to_string(gt.L()) + ")");
  }
  // Points on a line with a symmetric window: pairing the leftmost
  // unmatched candidates in order yields a maximum matching.
  const double window = tau * pred.L() + kWindowSlack;
  const auto& p = pred.frames();
  const auto& g = gt.frames();
  size_t i = 0;
  size_t j = 0;
  int matched = 0;
  while (i < p.size() && j < g.size()) {
    if (std::abs(p[i] - g[j]) <= window) {
      ++matched;
      ++i;
      ++j;
    } else if (p[i] < g[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matched;
}

double f1_reldis(const BoundarySet& pred, const BoundarySet& gt, double tau) {
  const int m = match_boundaries(pred, gt, tau);
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty() || m == 0) return 0.0;
  const double precision = static_cast<double>(m) / pred.size();
  const double recall = static_cast<double>(m) / gt.size();
  return 2.0 * precision * recall / (precision + recall);
}

double conventional_f1(const BoundarySet& pred, const std::vector<BoundarySet>& annotations,
                       double tau) {
  require_nonempty(annotations, "annotations");
  return best_against(pred, annotations, tau);
}

double f1_p2g(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau) {
  require_nonempty(preds, "predictions");
  require_nonempty(gts, "ground truths");
  double total = 0.0;
  for (const BoundarySet& p : preds) total += best_against(p, gts, tau);
  return total / static_cast<double>(preds.size());
}

double f1_g2p(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau) {
  require_nonempty(preds, "predictions");
  require_nonempty(gts, "ground truths");
  double total = 0.0;
  for (const BoundarySet& g : gts) {
    double best = 0.0;
    for (const BoundarySet& p : preds) best = std::max(best, f1_reldis(p, g, tau));
    total += best;
  }
  return total / static_cast<double>(gts.size());
}

double f1_sym(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau) {
  const double a = f1_p2g(preds, gts, tau);
  const double b = f1_g2p(preds, gts, tau);
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double diversity(const std::vector<BoundarySet>& preds, double tau) {
  require_nonempty(preds, "predictions");
  return mean_pairwise_distance(preds, preds, tau);
}

double ged(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts, double tau) {
  require_nonempty(preds, "predictions");
  require_nonempty(gts, "ground truths");
  return 2.0 * mean_pairwise_distance(preds, gts, tau) - mean_pairwise_distance(preds, preds, tau) -
         mean_pairwise_distance(gts, gts, tau);
}

MetricValues evaluate_video(const std::vector<BoundarySet>& preds,
                            const std::vector<BoundarySet>& gts, double tau) {
  MetricValues v;
  double conv = 0.0;
  for (const BoundarySet& p : preds) conv += conventional_f1(p, gts, tau);
  v.f1 = conv / static_cast<double>(preds.size());
  v.f1_p2g = f1_p2g(preds, gts, tau);
  v.f1_g2p = f1_g2p(preds, gts, tau);
  v.f1_sym = (v.f1_p2g + v.f1_g2p == 0.0) ? 0.0
                                           : 2.0 * v.f1_p2g * v.f1_g2p / (v.f1_p2g + v.f1_g2p);
  v.diversity = diversity(preds, tau);
  v.ged = ged(preds, gts, tau);
  return v;
}

EvalReport evaluate_dataset(const std::map<std::string, std::vector<BoundarySet>>& all_preds,
                            const std::map<std::string, std::vector<BoundarySet>>& all_gts,
                            const EvalConfig& config) {
  std::string missing;
  for (const auto& [id, _] : all_preds) {
    if (!all_gts.count(id)) missing += " " + id + "(no annotations)";
  }
  for (const auto& [id, _] : all_gts) {
    if (!all_preds.count(id)) missing += " " + id + "(no predictions)";
  }
  if (!missing.empty()) throw DataError("video ids do not align:" + missing);
  if (all_preds.empty()) throw DataError("no videos to evaluate");

  const std::vector<double> taus = config.effective_thresholds();
  for (double tau : taus) {
    if (!(tau > 0.0)) throw ConfigError("rel_dis threshold must be > 0");
  }
  EvalReport report;
  for (const auto& [id, preds] : all_preds) {
    const auto& gts = all_gts.at(id);
    for (double tau : taus) report.per_video.push_back({id, tau, evaluate_video(preds, gts, tau)});
  }
  const double n = static_cast<double>(all_preds.size());
  for (double tau : taus) {
    MetricValues acc;
    for (const VideoReport& r : report.per_video) {
      if (r.rel_dis != tau) continue;
      acc.f1 += r.values.f1;
      acc.f1_p2g += r.values.f1_p2g;
      acc.f1_g2p += r.values.f1_g2p;
      acc.f1_sym += r.values.f1_sym;
      acc.diversity += r.values.diversity;
      acc.ged += r.values.ged;
    }
    acc.f1 /= n;
    acc.f1_p2g /= n;
    acc.f1_g2p /= n;
    acc.f1_sym /= n;
    acc.diversity /= n;
    acc.ged /= n;
    report.summary[tau] = acc;
  }
  return report;
}

}  // namespace boundiff
