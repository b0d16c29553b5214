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

#include "boundiff/postprocess.h"

#include <vector>

#include "boundiff/error.h"

namespace boundiff {

void PostprocessConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("postprocess delta must lie in (0, 1)");
  if (!(signal_scale > 0.0)) throw ConfigError("signal scale must be positive");
}

double score_of(double value, double signal_scale) { return (value / signal_scale + 1.0) / 2.0; }

BoundarySet binarize_runs(const BoundarySignal& signal, const PostprocessConfig& config) {
  config.validate();
  const int L = static_cast<int>(signal.size());
  std::vector<int> frames;
  int run_start = -1;
  for (int l = 0; l <= L; ++l) {
    const bool above = l < L && score_of(signal.values[l], config.signal_scale) > config.delta;
    if (above && run_start < 0) {
      run_start = l;
    } else if (!above && run_start >= 0) {
      frames.push_back((run_start + l - 1) / 2);
      run_start = -1;
    }
  }
  return BoundarySet(std::move(frames), std::max(L, 1));
}

}  // namespace boundiff
