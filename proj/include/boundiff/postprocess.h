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

#ifndef BOUNDIFF_POSTPROCESS_H_
#define BOUNDIFF_POSTPROCESS_H_

#include "boundiff/metrics.h"
#include "boundiff/signal.h"

namespace boundiff {

struct PostprocessConfig {
  double delta = 0.5;
  double signal_scale = 1.0;

  // Throws ConfigError unless 0 < delta < 1 and signal_scale > 0.
  void validate() const;
};

// Signal value v -> score (v / s + 1) / 2.
double score_of(double value, double signal_scale);

// One boundary per maximal run of frames with score > delta, placed at
// floor((first + last) / 2).
BoundarySet binarize_runs(const BoundarySignal& signal, const PostprocessConfig& config);

}  // namespace boundiff

#endif  // BOUNDIFF_POSTPROCESS_H_
