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


// Experiment commands behind the CLI. Each writes effective_config.txt into
// its output directory before doing any work.

#ifndef BOUNDIFF_COMMANDS_H_
#define BOUNDIFF_COMMANDS_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "boundiff/data.h"
#include "boundiff/diffusion.h"
#include "boundiff/metrics.h"
#include "boundiff/nn.h"
#include "boundiff/postprocess.h"
#include "boundiff/run_config.h"

namespace boundiff {

// Worker threads for per-video sampling: BOUNDIFF_THREADS if set, else the
// hardware concurrency.
int thread_count();

// Seed of the sampling chains for one video, derived from the video id so
// that it does not depend on which other videos are present.
uint64_t video_sample_seed(uint64_t seed, const std::string& video_id);

using DenoiserFor = std::function<const Denoiser&(size_t video)>;
using ConditionFor = std::function<ConditionEmbedding(size_t video)>;

// N_P boundary sets per video, in dataset order. Videos are processed in
// parallel; results do not depend on the thread count.
std::vector<std::vector<BoundarySet>> sample_boundaries(const Dataset& dataset,
                                                        const DenoiserFor& denoiser,
                                                        const ConditionFor& condition,
                                                        const NoiseSchedule& schedule,
                                                        const SampleConfig& sample,
                                                        const PostprocessConfig& post,
                                                        int threads = 1);

// Same, with a trained model encoding each video's features. Throws
// ModelError when the dataset does not fit the model's L or D.
std::vector<std::vector<BoundarySet>> sample_boundaries(const DenoiserModel& model,
                                                        const Dataset& dataset,
                                                        const NoiseSchedule& schedule,
                                                        const SampleConfig& sample,
                                                        const PostprocessConfig& post,
                                                        int threads = 1);

// Predictions keyed by video id, as evaluate_dataset expects.
std::map<std::string, std::vector<BoundarySet>> by_video(
    const Dataset& dataset, const std::vector<std::vector<BoundarySet>>& sets);

// Throws ModelError when the dataset's L or D disagrees with the model.
void check_dataset_fits(const Dataset& dataset, const ModelConfig& model);

void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out_dir);

// With resume, continues from <out_dir>/checkpoint_final.ckpt.
void cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir, bool resume, std::ostream& log);

void cmd_sample(const RunConfig& config, const std::filesystem::path& checkpoint,
                const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);

EvalReport cmd_eval(const RunConfig& config, const std::filesystem::path& predictions,
                    const std::filesystem::path& annotations,
                    const std::filesystem::path& out_dir, std::ostream& log);

void cmd_sweep_cfg(const RunConfig& config, const std::filesystem::path& checkpoint,
                   const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                   std::ostream& log);

}  // namespace boundiff

#endif  // BOUNDIFF_COMMANDS_H_
