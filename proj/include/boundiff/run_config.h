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


// Run configuration: every tunable of every command under one dotted
// key=value namespace.
//
//   # comment
//   seed = 7
//   train.profile = desk
//   sample.cfg_weight = 0.6
//
// Unknown keys are rejected. Later entries override earlier ones, except
// that train.profile is applied before any other train.* key.

#ifndef BOUNDIFF_RUN_CONFIG_H_
#define BOUNDIFF_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boundiff/data.h"
#include "boundiff/diffusion.h"
#include "boundiff/metrics.h"
#include "boundiff/nn.h"
#include "boundiff/postprocess.h"
#include "boundiff/schedule.h"
#include "boundiff/train.h"

namespace boundiff {

struct RunConfig {
  uint64_t seed = 0;
  double signal_scale = 1.0;
  ScheduleKind schedule_kind = ScheduleKind::kCosine;
  std::pair<double, double> beta_range = {1e-4, 0.02};
  ModelConfig model;
  std::string train_profile = "desk";
  TrainConfig train = TrainConfig::profile("desk");
  SampleConfig sample;
  PostprocessConfig postprocess;
  EvalConfig eval;
  bool eval_sweep = false;
  SyntheticConfig data;
  std::vector<double> sweep_weights = {0.1, 0.3, 0.6, 1.0, 2.0, 5.0, 10.0};

  // Builds a config from defaults plus `entries` (file lines and flag
  // overrides, in order). Throws ConfigError on unknown keys or bad values.
  static RunConfig from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

  // Copies seed and signal_scale into the sub-configs and validates them.
  void finalize();

  NoiseSchedule schedule() const;

  // Every key with its effective value, one "key = value" per line, sorted.
  std::string to_text() const;

  static const std::vector<std::string>& keys();
};

// key=value lines from a file; '#' starts a comment. Throws ConfigError
// naming the line for malformed input.
std::vector<std::pair<std::string, std::string>> read_config_entries(
    const std::filesystem::path& path);

// Shortest decimal that round-trips.
std::string format_number(double value);

}  // namespace boundiff

#endif  // BOUNDIFF_RUN_CONFIG_H_
