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


// Hand-rolled generators for property tests.

#ifndef BOUNDIFF_TESTS_TEST_UTIL_H_
#define BOUNDIFF_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <vector>

#include "boundiff/autodiff.h"
#include "boundiff/metrics.h"
#include "boundiff/rng.h"
#include "boundiff/signal.h"

namespace boundiff::testing {

inline ad::Tensor random_tensor(Rng& rng, size_t rows, size_t cols, double spread = 1.0,
                                bool requires_grad = false) {
  ad::Tensor t = ad::Tensor::zeros(rows, cols, requires_grad);
  for (double& v : t.mutable_data()) v = spread * (2.0 * rng.uniform() - 1.0);
  return t;
}

inline BoundarySignal random_signal(Rng& rng, size_t L, double spread = 1.0) {
  BoundarySignal s{std::vector<double>(L), 1.0};
  for (double& v : s.values) v = spread * (2.0 * rng.uniform() - 1.0);
  return s;
}

// +-1 labels with a few boundaries.
inline BoundarySignal random_labels(Rng& rng, size_t L) {
  BoundarySignal s{std::vector<double>(L, -1.0), 1.0};
  const int k = static_cast<int>(rng.uniform_int(0, 4));
  for (int i = 0; i < k; ++i) s.values[rng.uniform_int(0, static_cast<int64_t>(L) - 1)] = 1.0;
  return s;
}

inline BoundarySet random_set(Rng& rng, int L, int max_size) {
  const int n = static_cast<int>(rng.uniform_int(0, std::min(max_size, L)));
  std::vector<int> frames;
  for (int i = 0; i < n; ++i) frames.push_back(static_cast<int>(rng.uniform_int(0, L - 1)));
  return BoundarySet::from_unsorted(frames, L);
}

inline std::vector<BoundarySet> random_sets(Rng& rng, int count, int L, int max_size) {
  std::vector<BoundarySet> out;
  for (int i = 0; i < count; ++i) out.push_back(random_set(rng, L, max_size));
  return out;
}

}  // namespace boundiff::testing

#endif  // BOUNDIFF_TESTS_TEST_UTIL_H_
