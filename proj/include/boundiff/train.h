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


// Guidance-dropout training: annotation cycling, forward corruption, MSE
// on the y0 estimate, AdamW, and checkpoints.

#ifndef BOUNDIFF_TRAIN_H_
#define BOUNDIFF_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "boundiff/data.h"
#include "boundiff/nn.h"
#include "boundiff/rng.h"
#include "boundiff/schedule.h"
#include "boundiff/signal.h"

namespace boundiff {

struct TrainConfig {
  int T_train = 1000;
  double cfg_drop_p = 0.1;
  double lr = 2e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 2;
  int epochs = 1;
  uint64_t seed = 0;
  double signal_scale = 1.0;
  // Frames on each side of a boundary also set to +scale. 0 = impulses.
  int smoothing_radius = 0;

  void validate() const;

  // "paper": lr 2e-5, batch 2. "desk": lr 1e-3, batch 16, 30 epochs.
  static TrainConfig profile(const std::string& name);
};

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int64_t step = 0;

  static OptimizerState for_model(const DenoiserModel& model);
};

// Labels in {-scale, +scale}: +scale within `radius` frames of a boundary.
BoundarySignal to_signal(const BoundarySet& boundaries, double scale, int radius = 0);

struct TrainItem {
  ad::Tensor features;  // L x D
  BoundarySignal y0;
};

// Decoupled weight decay, then the bias-corrected Adam step. Reads each
// parameter's accumulated grad (zero if absent).
void adamw_update(std::vector<NamedParameter>& params, OptimizerState& opt,
                  const TrainConfig& cfg);

// One optimizer step over `batch`. Per item, in order: t ~ U{1..T_train},
// eps ~ N(0, I), condition dropped with probability cfg_drop_p. Returns the
// batch-mean MSE. Throws TrainingError on a non-finite loss.
double train_step(DenoiserModel& model, OptimizerState& opt, const std::vector<TrainItem>& batch,
                  const NoiseSchedule& schedule, const TrainConfig& cfg, Rng& rng);

struct AnnotationPair {
  size_t video = 0;
  size_t annotation = 0;
};

// Enumerates (video, annotation) pairs so every annotation serves as the
// target exactly once per epoch.
class AnnotationCursor {
 public:
  // Throws ConfigError for an empty dataset, DataError for a video without
  // annotations.
  explicit AnnotationCursor(const Dataset& dataset);

  size_t pairs_per_epoch() const { return pairs_.size(); }

  // Round r visits annotation r of every video that has one; the
  // concatenated rounds are then shuffled with rng.
  std::vector<AnnotationPair> epoch_order(Rng& rng) const;

 private:
  std::vector<AnnotationPair> pairs_;
};

using StepCallback = std::function<void(int64_t step, double loss)>;

// Runs one epoch with the stream Rng::stream(cfg.seed, {epoch}), so epoch k
// is reproducible on its own (resume). Returns the item-weighted mean loss.
double train_epoch(DenoiserModel& model, OptimizerState& opt, const Dataset& dataset,
                   const NoiseSchedule& schedule, const TrainConfig& cfg, int epoch,
                   const StepCallback& on_step = {});

// Checkpoint: a text manifest
//   boundiff-checkpoint 1
//   model.<key>=<value>      (ModelConfig)
//   meta.<key>=<value>       (free-form, e.g. epochs_done)
//   step=<optimizer step>
//   tensor <name> <rows>x<cols> <byte offset>
//   end
// followed by little-endian doubles in manifest order. Optimizer moments
// are stored as adam.m:<name> and adam.v:<name>.
struct Checkpoint {
  std::unique_ptr<DenoiserModel> model;
  OptimizerState opt;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const DenoiserModel& model, const OptimizerState& opt,
                     const std::map<std::string, std::string>& meta,
                     const std::filesystem::path& path);

// Throws CheckpointError naming the offending tensor on any mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace boundiff

#endif  // BOUNDIFF_TRAIN_H_
