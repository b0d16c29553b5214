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


// Brute-force reference implementations for tests and calibration. Nothing
// here calls into the production metric, matching, or autodiff code.

#ifndef BOUNDIFF_ORACLES_H_
#define BOUNDIFF_ORACLES_H_

#include <functional>
#include <vector>

#include "boundiff/metrics.h"
#include "boundiff/signal.h"

namespace boundiff::oracle {

// Perfect denoiser: returns the stored y0 regardless of y_t, t, condition.
class OracleDenoiser : public Denoiser {
 public:
  explicit OracleDenoiser(BoundarySignal y0) : y0_(std::move(y0)) {}

  BoundarySignal predict(const BoundarySignal&, int, const ConditionEmbedding*) const override {
    return y0_;
  }

 private:
  BoundarySignal y0_;
};

// Largest number of disjoint (p, g) pairs with |p - g| <= tau * L, by
// exhaustive search. Throws ArgumentError when either set has more than 10.
int brute_force_matching(const BoundarySet& pred, const BoundarySet& gt, double tau);

// F1 from the brute-force matching count.
double direct_f1(const BoundarySet& pred, const BoundarySet& gt, double tau);

// All per-video metrics with nested loops over the direct F1.
MetricValues direct_metric_eval(const std::vector<BoundarySet>& preds,
                                const std::vector<BoundarySet>& gts, double tau);

using FlatFn = std::function<double(const std::vector<std::vector<double>>&)>;

// Central differences per coordinate: (f(x + eps) - f(x - eps)) / (2 eps).
std::vector<std::vector<double>> finite_difference_grad(const FlatFn& f,
                                                        std::vector<std::vector<double>> inputs,
                                                        double eps = 1e-5);

// Windowed cosine similarity of an L x d row-major matrix, entry by entry.
std::vector<double> direct_self_similarity(const std::vector<double>& features, size_t L,
                                           size_t d, int window);

}  // namespace boundiff::oracle

#endif  // BOUNDIFF_ORACLES_H_
