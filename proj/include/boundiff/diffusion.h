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

#ifndef BOUNDIFF_DIFFUSION_H_
#define BOUNDIFF_DIFFUSION_H_

#include <cstdint>
#include <vector>

#include "boundiff/rng.h"
#include "boundiff/schedule.h"
#include "boundiff/signal.h"

namespace boundiff {

struct SampleConfig {
  int steps = 32;
  double guidance_weight = 0.6;
  int num_predictions = 5;
  double eta = 0.0;
  uint64_t seed = 0;
  double signal_scale = 1.0;
  // Clamp the guided y0 estimate to [-signal_scale, signal_scale].
  bool clamp = true;
};

// sqrt(abar_t) y0 + sqrt(1 - abar_t) eps.
BoundarySignal corrupt(const BoundarySignal& y0, int t, const BoundarySignal& eps,
                       const NoiseSchedule& schedule);

// Noise implied by y_t under the y0 estimate: (y_t - sqrt(abar_t) y0) / sqrt(1 - abar_t).
BoundarySignal implied_noise(const BoundarySignal& y_t, const BoundarySignal& y0, int t,
                             const NoiseSchedule& schedule);

// One DDIM update from t_now to t_next. Returns y0_hat exactly when
// t_next == -1. `noise` is only read when eta > 0.
BoundarySignal ddim_step(const BoundarySignal& y_t, const BoundarySignal& y0_hat, int t_now,
                         int t_next, const NoiseSchedule& schedule, double eta,
                         const BoundarySignal& noise);

// (1 + w) y_cond - w y_uncond.
BoundarySignal cfg_combine(const BoundarySignal& y_cond, const BoundarySignal& y_uncond,
                           double w);

// Standard-normal signal of length L.
BoundarySignal gaussian_signal(size_t L, Rng& rng, double scale = 1.0);

// Runs the guided DDIM ladder from init_noise. When eta > 0 the per-step
// noise is drawn from step_rng (or from a stream of cfg.seed if null).
BoundarySignal sample_one(const Denoiser& denoiser, const ConditionEmbedding& condition,
                          const NoiseSchedule& schedule, const SampleConfig& cfg,
                          const BoundarySignal& init_noise, Rng* step_rng = nullptr);

// N_P chains; chain k draws its init noise (then any step noise) from
// Rng::stream(cfg.seed, {k}), so chain k does not depend on N_P.
std::vector<BoundarySignal> sample_many(const Denoiser& denoiser,
                                        const ConditionEmbedding& condition,
                                        const NoiseSchedule& schedule, const SampleConfig& cfg);

}  // namespace boundiff

#endif  // BOUNDIFF_DIFFUSION_H_
