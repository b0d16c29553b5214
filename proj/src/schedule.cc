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

#include "boundiff/schedule.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "boundiff/error.h"

namespace boundiff {
namespace {

constexpr double kCosineOffset = 0.008;
constexpr double kMaxBeta = 0.999;

double cosine_curve(double t, double T) {
  const double phase = (t / T + kCosineOffset) / (1.0 + kCosineOffset);
  const double c = std::cos(phase * std::numbers::pi / 2.0);
  return c * c;
}

}  // namespace

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind '" + std::string(name) +
                    "' (expected linear|cosine)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "cosine";
}

NoiseSchedule build_schedule(ScheduleKind kind, int T,
                             std::pair<double, double> beta_range) {
  if (T < 1) throw ConfigError("schedule T must be >= 1, got " + std::to_string(T));
  NoiseSchedule s;
  s.kind = kind;
  s.T = T;
  s.betas.assign(T + 1, 0.0);
  s.alphas.assign(T + 1, 1.0);
  s.alpha_bars.assign(T + 1, 1.0);

  if (kind == ScheduleKind::kLinear) {
    const auto [lo, hi] = beta_range;
    if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
      throw ConfigError("linear schedule needs 0 < beta_lo <= beta_hi < 1");
    }
    for (int t = 1; t <= T; ++t) {
      const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
      s.betas[t] = lo + (hi - lo) * frac;
    }
  } else {
    const double f0 = cosine_curve(0.0, T);
    for (int t = 1; t <= T; ++t) {
      const double prev = cosine_curve(t - 1, T) / f0;
      const double cur = cosine_curve(t, T) / f0;
      s.betas[t] = std::clamp(1.0 - cur / prev, 0.0, kMaxBeta);
    }
  }

  for (int t = 1; t <= T; ++t) {
    s.alphas[t] = 1.0 - s.betas[t];
    s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
  }
  return s;
}

double alpha_bar(const NoiseSchedule& schedule, int t) {
  if (t < -1 || t > schedule.T) {
    throw ArgumentError("time step " + std::to_string(t) + " outside [-1, " +
                        std::to_string(schedule.T) + "]");
  }
  return schedule.alpha_bars[std::max(t, 0)];
}

StepLadder make_step_ladder(int T, int steps) {
  if (steps < 1 || steps > T) {
    throw ConfigError("inference steps must lie in [1, T=" + std::to_string(T) +
                      "], got " + std::to_string(steps));
  }
  std::vector<int> grid;
  grid.reserve(steps + 1);
  for (int k = steps; k >= 0; --k) {
    const double v = -1.0 + static_cast<double>(T) * k / steps;
    const int r = static_cast<int>(std::lround(v));
    if (grid.empty() || grid.back() != r) grid.push_back(r);
  }
  StepLadder ladder;
  ladder.steps = steps;
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    ladder.pairs.emplace_back(grid[i], grid[i + 1]);
  }
  return ladder;
}

}  // namespace boundiff
