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

#include "boundiff/data.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "boundiff/error.h"
#include "boundiff/le_bytes.h"
#include "boundiff/rng.h"

namespace boundiff {

namespace fs = std::filesystem;
using ad::Tensor;

namespace {

constexpr std::array<char, 4> kFeatureMagic = {'D', 'B', 'F', '1'};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// k-1 sorted interior boundaries such that every segment has at least
// min_segment frames, uniformly over the admissible layouts.
std::vector<int> draw_segment_starts(int L, int k, int min_segment, Rng& rng) {
  const int slack = L - k * min_segment;
  const int slots = slack + k - 1;
  std::vector<int> pool(slots);
  for (int i = 0; i < slots; ++i) pool[i] = i;
  for (int i = 0; i < k - 1; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, slots - 1));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> cuts(pool.begin(), pool.begin() + (k - 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> starts;
  int pos = 0;
  int prev = -1;
  for (int c : cuts) {
    pos += min_segment + (c - prev - 1);
    starts.push_back(pos);
    prev = c;
  }
  return starts;
}

}  // namespace

std::map<std::string, std::vector<BoundarySet>> Dataset::annotation_map() const {
  std::map<std::string, std::vector<BoundarySet>> out;
  for (const VideoRecord& v : videos) out[v.id] = v.annotations;
  return out;
}

void SyntheticConfig::validate() const {
  if (num_videos < 1) throw ConfigError("data.num_videos must be >= 1");
  if (L < 2) throw ConfigError("data.L must be >= 2");
  if (D < 1) throw ConfigError("data.D must be >= 1");
  if (segments_range.first < 2 || segments_range.second < segments_range.first) {
    throw ConfigError("data.segments range must satisfy 2 <= min <= max");
  }
  if (min_segment < 1) throw ConfigError("data.min_segment must be >= 1");
  if (segments_range.second * min_segment > L) {
    throw ConfigError("data: " + std::to_string(segments_range.second) + " segments of at least " +
                      std::to_string(min_segment) + " frames do not fit in L=" + std::to_string(L));
  }
  if (feature_noise_sigma < 0.0) throw ConfigError("data.feature_noise_sigma must be >= 0");
  if (num_annotators < 1) throw ConfigError("data.num_annotators must be >= 1");
  if (annotator_jitter_sigma < 0.0) throw ConfigError("data.jitter_sigma must be >= 0");
  if (!(annotator_drop_p >= 0.0 && annotator_drop_p < 1.0)) {
    throw ConfigError("data.drop_p must lie in [0, 1)");
  }
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  SyntheticData out;
  const int L = config.L;
  const int D = config.D;
  for (int v = 0; v < config.num_videos; ++v) {
    Rng rng = Rng::stream(config.seed, {static_cast<uint64_t>(v), 0});
    const int k = static_cast<int>(rng.uniform_int(config.segments_range.first,
                                                   config.segments_range.second));
    const std::vector<int> starts = draw_segment_starts(L, k, config.min_segment, rng);

    std::vector<std::vector<double>> states(k, std::vector<double>(D));
    for (auto& s : states) {
      for (double& x : s) x = rng.normal();
    }
    Tensor features = Tensor::zeros(L, D);
    int segment = 0;
    for (int l = 0; l < L; ++l) {
      while (segment < k - 1 && l >= starts[segment]) ++segment;
      for (int d = 0; d < D; ++d) {
        features.at(l, d) = states[segment][d] + config.feature_noise_sigma * rng.normal();
      }
    }

    VideoRecord record;
    char id[64];
    std::snprintf(id, sizeof(id), "%s%05d", config.id_prefix.c_str(), v);
    record.id = id;
    record.L = L;
    record.features = std::move(features);
    for (int a = 0; a < config.num_annotators; ++a) {
      Rng arng = Rng::stream(config.seed, {static_cast<uint64_t>(v), static_cast<uint64_t>(a) + 1});
      std::vector<int> kept;
      int first = -1;
      for (int b : starts) {
        const int jitter = static_cast<int>(std::lround(config.annotator_jitter_sigma * arng.normal()));
        const int pos = std::clamp(b + jitter, 1, L - 1);
        if (first < 0) first = pos;
        if (!arng.bernoulli(config.annotator_drop_p)) kept.push_back(pos);
      }
      if (kept.empty()) kept.push_back(first);
      record.annotations.push_back(BoundarySet::from_unsorted(std::move(kept), L));
    }
    out.dataset.videos.push_back(std::move(record));
    out.latent_truth.emplace_back(starts, L);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records

std::string format_record(const BoundaryRecord& r) {
  nlohmann::ordered_json j;
  j["video_id"] = r.video_id;
  j["source"] = r.source;
  j["annotator_or_sample_index"] = r.index;
  j["L"] = r.boundaries.L();
  j["frames"] = r.boundaries.frames();
  return j.dump();
}

BoundaryRecord parse_record(const std::string& line, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed record: " + e.what());
  }
  BoundaryRecord r;
  try {
    r.video_id = j.at("video_id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.index = j.at("annotator_or_sample_index").get<int>();
    const int L = j.at("L").get<int>();
    auto frames = j.at("frames").get<std::vector<int>>();
    if (L < 1) throw DataError(where + ": L must be >= 1");
    for (int f : frames) {
      if (f < 0 || f >= L) {
        throw DataError(where + ": frame " + std::to_string(f) + " outside [0, " +
                        std::to_string(L) + ")");
      }
    }
    r.boundaries = BoundarySet::from_unsorted(std::move(frames), L);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad record field: " + e.what());
  }
  if (r.source != "gt" && r.source != "pred") {
    throw DataError(where + ": source must be \"gt\" or \"pred\", got \"" + r.source + "\"");
  }
  return r;
}

void write_records(const fs::path& path, const std::vector<BoundaryRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const BoundaryRecord& r : records) out << format_record(r) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<BoundaryRecord> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<BoundaryRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(line, path.string() + ":" + std::to_string(lineno)));
  }
  return out;
}

std::map<std::string, std::vector<BoundarySet>> group_records(
    const std::vector<BoundaryRecord>& records) {
  std::map<std::string, std::vector<std::pair<int, BoundarySet>>> tmp;
  for (const BoundaryRecord& r : records) tmp[r.video_id].emplace_back(r.index, r.boundaries);
  std::map<std::string, std::vector<BoundarySet>> out;
  for (auto& [id, items] : tmp) {
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& dst = out[id];
    for (auto& [_, set] : items) dst.push_back(std::move(set));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

void write_features(const fs::path& path, const Tensor& features) {
  std::string buf(kFeatureMagic.begin(), kFeatureMagic.end());
  le::put_u32(buf, static_cast<uint32_t>(features.rows()));
  le::put_u32(buf, static_cast<uint32_t>(features.cols()));
  for (double v : features.data()) le::put_f64(buf, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Tensor read_features(const fs::path& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 12 || !std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), buf.begin())) {
    throw DataError(path.string() + ": bad magic (expected DBF1)");
  }
  const auto L = static_cast<size_t>(le::get(buf, 4, 4));
  const auto D = static_cast<size_t>(le::get(buf, 8, 4));
  const size_t expected = 12 + 8 * L * D;
  if (buf.size() != expected) {
    throw DataError(path.string() + ": payload is " + std::to_string(buf.size()) +
                    " bytes, expected " + std::to_string(expected) + " for " + std::to_string(L) +
                    "x" + std::to_string(D));
  }
  std::vector<double> data(L * D);
  for (size_t i = 0; i < data.size(); ++i) data[i] = le::get_f64(buf, 12 + 8 * i);
  return Tensor({L, D}, std::move(data));
}

// ---------------------------------------------------------------------------
// Dataset directories

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "features", ec);
  if (ec) throw DataError("cannot create " + (dir / "features").string() + ": " + ec.message());
  std::vector<BoundaryRecord> records;
  for (const VideoRecord& v : dataset.videos) {
    write_features(dir / "features" / (v.id + ".dbf"), v.features);
    for (size_t a = 0; a < v.annotations.size(); ++a) {
      records.push_back({v.id, "gt", static_cast<int>(a), v.annotations[a]});
    }
  }
  write_records(dir / "annotations.jsonl", records);
}

Dataset read_dataset(const fs::path& dir) {
  const auto grouped = group_records(read_records(dir / "annotations.jsonl"));
  std::set<std::string> feature_ids;
  const fs::path fdir = dir / "features";
  if (!fs::is_directory(fdir)) throw DataError("missing feature directory " + fdir.string());
  for (const auto& entry : fs::directory_iterator(fdir)) {
    if (entry.path().extension() == ".dbf") feature_ids.insert(entry.path().stem().string());
  }
  Dataset ds;
  std::string missing;
  for (const std::string& id : feature_ids) {
    if (!grouped.count(id)) missing += " " + id + "(no annotations)";
  }
  for (const auto& [id, _] : grouped) {
    if (!feature_ids.count(id)) missing += " " + id + "(no features)";
  }
  if (!missing.empty()) throw DataError(dir.string() + ": video ids do not align:" + missing);
  for (const auto& [id, sets] : grouped) {
    VideoRecord v;
    v.id = id;
    v.features = read_features(fdir / (id + ".dbf"));
    v.L = static_cast<int>(v.features.rows());
    for (const BoundarySet& s : sets) {
      if (s.L() != v.L) {
        throw DataError(id + ": annotation L=" + std::to_string(s.L()) +
                        " but features have " + std::to_string(v.L) + " frames");
      }
    }
    v.annotations = sets;
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

Dataset ingest_external_features(const fs::path& feature_dir, const fs::path& annotation_file,
                                 int target_L) {
  if (target_L < 1) throw ConfigError("ingest: target L must be >= 1");
  std::vector<BoundaryRecord> gt_records;
  for (BoundaryRecord& r : read_records(annotation_file)) {
    if (r.source == "gt") gt_records.push_back(std::move(r));
  }
  const auto grouped = group_records(gt_records);
  std::set<std::string> feature_ids;
  if (!fs::is_directory(feature_dir)) throw DataError("missing feature directory " + feature_dir.string());
  for (const auto& entry : fs::directory_iterator(feature_dir)) {
    if (entry.path().extension() == ".dbf") feature_ids.insert(entry.path().stem().string());
  }
  std::string missing;
  for (const std::string& id : feature_ids) {
    if (!grouped.count(id)) missing += " " + id + "(no annotations)";
  }
  for (const auto& [id, _] : grouped) {
    if (!feature_ids.count(id)) missing += " " + id + "(no features)";
  }
  if (!missing.empty()) throw DataError("ingest: video ids do not align:" + missing);

  Dataset ds;
  for (const auto& [id, sets] : grouped) {
    const Tensor raw = read_features(feature_dir / (id + ".dbf"));
    const int L_old = static_cast<int>(raw.rows());
    const size_t D = raw.cols();
    const double ratio = static_cast<double>(L_old) / target_L;
    Tensor resampled = Tensor::zeros(target_L, D);
    for (int j = 0; j < target_L; ++j) {
      const int src = std::clamp(static_cast<int>(std::lround(j * ratio)), 0, L_old - 1);
      for (size_t d = 0; d < D; ++d) resampled.at(j, d) = raw(src, d);
    }
    VideoRecord v;
    v.id = id;
    v.L = target_L;
    v.features = std::move(resampled);
    for (const BoundarySet& s : sets) {
      if (s.L() != L_old) {
        throw DataError("ingest: " + id + " annotation L=" + std::to_string(s.L()) +
                        " but features have " + std::to_string(L_old) + " frames");
      }
      std::vector<int> frames;
      for (int f : s.frames()) {
        const auto mapped = static_cast<int>(std::lround(static_cast<double>(f) * target_L / L_old));
        frames.push_back(std::clamp(mapped, 0, target_L - 1));
      }
      v.annotations.push_back(BoundarySet::from_unsorted(std::move(frames), target_L));
    }
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

}  // namespace boundiff
