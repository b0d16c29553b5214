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

// Synthetic multi-annotator videos and the on-disk formats.
//
// Feature file (.dbf): "DBF1", uint32 L, uint32 D (little-endian), then L*D
// little-endian IEEE-754 doubles, row-major by frame.
//
// Boundary records (.jsonl): one JSON object per line,
//   {"video_id":"vid00000","source":"gt","annotator_or_sample_index":0,
//    "L":100,"frames":[12,40,77]}
// with source "gt" for annotations and "pred" for predictions.

#ifndef BOUNDIFF_DATA_H_
#define BOUNDIFF_DATA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boundiff/autodiff.h"
#include "boundiff/metrics.h"

namespace boundiff {

struct VideoRecord {
  std::string id;
  int L = 0;
  ad::Tensor features;  // L x D
  std::vector<BoundarySet> annotations;
};

struct Dataset {
  std::vector<VideoRecord> videos;

  // Annotations keyed by video id, as evaluate_dataset expects.
  std::map<std::string, std::vector<BoundarySet>> annotation_map() const;
};

struct SyntheticConfig {
  int num_videos = 250;
  int L = 100;
  int D = 16;
  std::pair<int, int> segments_range = {3, 6};
  int min_segment = 8;
  double feature_noise_sigma = 0.5;
  int num_annotators = 3;
  double annotator_jitter_sigma = 1.0;
  double annotator_drop_p = 0.1;
  uint64_t seed = 0;
  std::string id_prefix = "vid";

  // Throws ConfigError for infeasible or out-of-range settings.
  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<BoundarySet> latent_truth;  // aligned with dataset.videos
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

struct BoundaryRecord {
  std::string video_id;
  std::string source;  // "gt" | "pred"
  int index = 0;
  BoundarySet boundaries;
};

// One JSON line, no trailing newline.
std::string format_record(const BoundaryRecord& record);
// Throws DataError("<where>: ...") for malformed lines or frames outside [0, L).
BoundaryRecord parse_record(const std::string& line, const std::string& where);

void write_records(const std::filesystem::path& path, const std::vector<BoundaryRecord>& records);
std::vector<BoundaryRecord> read_records(const std::filesystem::path& path);

// Groups records by video id (ordered by index within a video).
std::map<std::string, std::vector<BoundarySet>> group_records(
    const std::vector<BoundaryRecord>& records);

void write_features(const std::filesystem::path& path, const ad::Tensor& features);
ad::Tensor read_features(const std::filesystem::path& path);

// <dir>/features/<id>.dbf and <dir>/annotations.jsonl.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Loads .dbf files from feature_dir and "gt" records from annotation_file,
// resampling every video to target_L frames by nearest-frame selection and
// rescaling annotation frames by round(f * target_L / L_old).
Dataset ingest_external_features(const std::filesystem::path& feature_dir,
                                 const std::filesystem::path& annotation_file, int target_L);

}  // namespace boundiff

#endif  // BOUNDIFF_DATA_H_
