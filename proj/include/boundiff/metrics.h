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

// Boundary-set evaluation: relative-distance F1, the conventional max-F1
// protocol, the many-to-many symmetric F1, prediction diversity, and the
// generalized energy distance under d = 1 - F1.

#ifndef BOUNDIFF_METRICS_H_
#define BOUNDIFF_METRICS_H_

#include <map>
#include <string>
#include <vector>

namespace boundiff {

// Strictly increasing frame indices in [0, L).
class BoundarySet {
 public:
  BoundarySet() = default;
  // Throws ArgumentError unless frames are strictly increasing within [0, L).
  BoundarySet(std::vector<int> frames, int L);
  // Sorts, deduplicates, and validates.
  static BoundarySet from_unsorted(std::vector<int> frames, int L);

  const std::vector<int>& frames() const { return frames_; }
  int L() const { return L_; }
  size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }

  bool operator==(const BoundarySet&) const = default;

 private:
  std::vector<int> frames_;
  int L_ = 0;
};

struct EvalConfig {
  double rel_dis = 0.05;
  // When non-empty, evaluate_dataset reports every listed threshold instead
  // of rel_dis alone.
  std::vector<double> thresholds;

  std::vector<double> effective_thresholds() const;
};

// The Rel.Dis. sweep 0.05, 0.10, ..., 0.50.
std::vector<double> rel_dis_sweep();

// Size of a maximum one-to-one matching with |p - g| <= tau * L.
// Throws ArgumentError when the two sets disagree on L.
int match_boundaries(const BoundarySet& pred, const BoundarySet& gt, double tau);

// F1(empty, empty) = 1; F1(empty, non-empty) = 0.
double f1_reldis(const BoundarySet& pred, const BoundarySet& gt, double tau);

// max_j F1(pred, annotations[j]).
double conventional_f1(const BoundarySet& pred, const std::vector<BoundarySet>& annotations,
                       double tau);

double f1_p2g(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau);
double f1_g2p(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau);
// Harmonic mean of f1_p2g and f1_g2p; 0 when both are 0.
double f1_sym(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts,
              double tau);
// Mean of 1 - F1 over all ordered prediction pairs, diagonal included.
double diversity(const std::vector<BoundarySet>& preds, double tau);
// 2 E[d(P, G)] - E[d(P, P')] - E[d(G, G')] with d = 1 - F1, all means over
// ordered pairs including the diagonal.
double ged(const std::vector<BoundarySet>& preds, const std::vector<BoundarySet>& gts, double tau);

struct MetricValues {
  double f1 = 0.0;  // mean conventional F1 over the predictions
  double f1_p2g = 0.0;
  double f1_g2p = 0.0;
  double f1_sym = 0.0;
  double diversity = 0.0;
  double ged = 0.0;
};

// Every metric for one video at one threshold.
MetricValues evaluate_video(const std::vector<BoundarySet>& preds,
                            const std::vector<BoundarySet>& gts, double tau);

struct VideoReport {
  std::string video_id;
  double rel_dis = 0.0;
  MetricValues values;
};

struct EvalReport {
  std::vector<VideoReport> per_video;      // ordered by video id, then threshold
  std::map<double, MetricValues> summary;  // unweighted mean over videos, per threshold
};

// Keys are video ids. Throws DataError listing ids present on only one side.
EvalReport evaluate_dataset(const std::map<std::string, std::vector<BoundarySet>>& all_preds,
                            const std::map<std::string, std::vector<BoundarySet>>& all_gts,
                            const EvalConfig& config);

}  // namespace boundiff

#endif  // BOUNDIFF_METRICS_H_
