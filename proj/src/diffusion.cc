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

#include "boundiff/diffusion.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "boundiff/error.h"

namespace boundiff {
namespace {

void check_same_length(const BoundarySignal& a, const BoundarySignal& b, const char* op) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(op) + ": length mismatch " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
  }
}

}  // namespace

BoundarySignal corrupt(const BoundarySignal& y0, int t, const BoundarySignal& eps,
                       const NoiseSchedule& schedule) {
  check_same_length(y0, eps, "corrupt");
  const double ab = alpha_bar(schedule, t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  BoundarySignal out{std::vector<double>(y0.size()), y0.scale};
  for (size_t i = 0; i < y0.size(); ++i) out.values[i] = a * y0.values[i] + b * eps.values[i];
  return out;
}

BoundarySignal implied_noise(const BoundarySignal& y_t, const BoundarySignal& y0, int t,
                             const NoiseSchedule& schedule) {
  check_same_length(y_t, y0, "implied_noise");
  const double ab = alpha_bar(schedule, t);
  if (ab >= 1.0) throw ArgumentError("implied_noise: alpha_bar(t) == 1 leaves no noise");
  const double a = std::sqrt(ab);
  const double inv_b = 1.0 / std::sqrt(1.0 - ab);
  BoundarySignal out{std::vector<double>(y_t.size()), y_t.scale};
  for (size_t i = 0; i < y_t.size(); ++i) {
    out.values[i] = (y_t.values[i] - a * y0.values[i]) * inv_b;
  }
  return out;
}

BoundarySignal ddim_step(const BoundarySignal& y_t, const BoundarySignal& y0_hat, int t_now,
                         int t_next, const NoiseSchedule& schedule, double eta,
                         const BoundarySignal& noise) {
  check_same_length(y_t, y0_hat, "ddim_step");
  if (t_next >= t_now) {
    throw ArgumentError("ddim_step: t_next (" + std::to_string(t_next) +
                        ") must be below t_now (" + std::to_string(t_now) + ")");
  }
  const double ab_next = alpha_bar(schedule, t_next);
  const double ab_now = alpha_bar(schedule, t_now);
  if (ab_next >= 1.0) return y0_hat;
  if (ab_now >= 1.0) {
    throw ArgumentError("ddim_step: alpha_bar(t_now) == 1 makes the implied noise undefined");
  }

  double sigma = 0.0;
  if (eta > 0.0) {
    check_same_length(y_t, noise, "ddim_step");
    sigma = eta * std::sqrt((1.0 - ab_next) / (1.0 - ab_now)) * std::sqrt(1.0 - ab_now / ab_next);
  }
  const double a_next = std::sqrt(ab_next);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_next - sigma * sigma));
  const BoundarySignal eps_hat = implied_noise(y_t, y0_hat, t_now, schedule);

  BoundarySignal out{std::vector<double>(y_t.size()), y_t.scale};
  for (size_t i = 0; i < y_t.size(); ++i) {
    double v = a_next * y0_hat.values[i] + dir * eps_hat.values[i];
    if (sigma > 0.0) v += sigma * noise.values[i];
    out.values[i] = v;
  }
  return out;
}

BoundarySignal cfg_combine(const BoundarySignal& y_cond, const BoundarySignal& y_uncond,
                           double w) {
  check_same_length(y_cond, y_uncond, "cfg_combine");
  BoundarySignal out{std::vector<double>(y_cond.size()), y_cond.scale};
  for (size_t i = 0; i < y_cond.size(); ++i) {
    const double c = y_cond.values[i];
    const double u = y_uncond.values[i];
    // Written as c + w (c - u) so identical branches return c bit-for-bit.
    out.values[i] = c + w * (c - u);
  }
  return out;
}

BoundarySignal gaussian_signal(size_t L, Rng& rng, double scale) {
  BoundarySignal s{std::vector<double>(L), scale};
  for (double& v : s.values) v = rng.normal();
  return s;
}

BoundarySignal sample_one(const Denoiser& denoiser, const ConditionEmbedding& condition,
                          const NoiseSchedule& schedule, const SampleConfig& cfg,
                          const BoundarySignal& init_noise, Rng* step_rng) {
  if (condition.frames() != init_noise.size()) {
    throw ModelError("sample_one: condition has " + std::to_string(condition.frames()) +
                     " frames but the signal has " + std::to_string(init_noise.size()));
  }
  const StepLadder ladder = make_step_ladder(schedule.T, cfg.steps);
  Rng fallback = Rng::stream(cfg.seed, {0xffffffffULL});
  Rng& noise_rng = step_rng != nullptr ? *step_rng : fallback;
  const double s = cfg.signal_scale;

  BoundarySignal y = init_noise;
  y.scale = s;
  BoundarySignal noise;
  for (const auto& [t_now, t_next] : ladder.pairs) {
    BoundarySignal y0_hat = denoiser.predict(y, t_now, &condition);
    if (cfg.guidance_weight != 0.0) {
      const BoundarySignal uncond = denoiser.predict(y, t_now, nullptr);
      y0_hat = cfg_combine(y0_hat, uncond, cfg.guidance_weight);
    }
    if (cfg.clamp) {
      for (double& v : y0_hat.values) v = std::clamp(v, -s, s);
    }
    if (cfg.eta > 0.0 && t_next >= 0) noise = gaussian_signal(y.size(), noise_rng, s);
    y = ddim_step(y, y0_hat, t_now, t_next, schedule, cfg.eta, noise);
  }
  return y;
}

std::vector<BoundarySignal> sample_many(const Denoiser& denoiser,
                                        const ConditionEmbedding& condition,
                                        const NoiseSchedule& schedule, const SampleConfig& cfg) {
  if (cfg.num_predictions < 1) throw ConfigError("num_predictions must be >= 1");
  std::vector<BoundarySignal> out;
  out.reserve(cfg.num_predictions);
  for (int k = 0; k < cfg.num_predictions; ++k) {
    Rng rng = Rng::stream(cfg.seed, {static_cast<uint64_t>(k)});
    const BoundarySignal init = gaussian_signal(condition.frames(), rng, cfg.signal_scale);
    out.push_back(sample_one(denoiser, condition, schedule, cfg, init, &rng));
  }
  return out;
}

}  // namespace boundiff
