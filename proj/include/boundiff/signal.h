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

#ifndef BOUNDIFF_SIGNAL_H_
#define BOUNDIFF_SIGNAL_H_

#include <cstddef>
#include <vector>

#include "boundiff/autodiff.h"

namespace boundiff {

// Per-frame boundary signal. Binary labels are encoded 0 -> -scale,
// 1 -> +scale; diffusion states y_t live in the same space.
struct BoundarySignal {
  std::vector<double> values;
  double scale = 1.0;

  size_t size() const { return values.size(); }
  bool operator==(const BoundarySignal&) const = default;
};

// Encoder output E (L x C). Also the carrier for raw features when the model
// conditions on them directly.
struct ConditionEmbedding {
  ad::Tensor E;

  size_t frames() const { return E.defined() ? E.rows() : 0; }
};

// Anything that maps (y_t, t, condition) to an estimate of y_0. A null
// condition selects the unconditional branch (the all-zero condition).
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual BoundarySignal predict(const BoundarySignal& y_t, int t,
                                 const ConditionEmbedding* condition) const = 0;
};

}  // namespace boundiff

#endif  // BOUNDIFF_SIGNAL_H_
