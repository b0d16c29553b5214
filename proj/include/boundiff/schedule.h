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

#ifndef BOUNDIFF_SCHEDULE_H_
#define BOUNDIFF_SCHEDULE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace boundiff {

enum class ScheduleKind { kLinear, kCosine };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string to_string(ScheduleKind kind);

// Variance schedule over diffusion steps 1..T.
//
// betas/alphas are stored 1-based with a zero-index pad so that betas[t] is
// the step-t value; alpha_bars[0] == 1 and alpha_bars[t] is the product of
// alphas[1..t].
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kCosine;
  int T = 0;
  std::vector<double> betas;       // size T+1, betas[0] unused (0)
  std::vector<double> alphas;      // size T+1, alphas[0] unused (1)
  std::vector<double> alpha_bars;  // size T+1
};

// Throws ConfigError for T < 1 or a linear beta_range outside
// 0 < lo <= hi < 1. beta_range is ignored for the cosine kind.
NoiseSchedule build_schedule(ScheduleKind kind, int T,
                             std::pair<double, double> beta_range = {1e-4, 0.02});

// alpha_bars[max(t, 0)]; t == -1 is the fully-denoised sentinel.
// Throws ArgumentError outside [-1, T].
double alpha_bar(const NoiseSchedule& schedule, int t);

// Descending (t_now, t_next) pairs; the last t_next is -1.
struct StepLadder {
  int steps = 0;
  std::vector<std::pair<int, int>> pairs;
};

// steps+1 grid points obtained by rounding an even spacing over [-1, T-1].
// Throws ConfigError unless 1 <= steps <= T.
StepLadder make_step_ladder(int T, int steps);

}  // namespace boundiff

#endif  // BOUNDIFF_SCHEDULE_H_
