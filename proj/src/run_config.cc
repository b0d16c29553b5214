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


#include "boundiff/run_config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "boundiff/error.h"

namespace boundiff {
namespace {

std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key " + key + ": expected " + what + ", got \"" + value + "\"");
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list of numbers");
  return out;
}

std::string list_text(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_number(xs[i]);
  return out;
}

struct Key {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define INT_KEY(field) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_int(k, v); }, \
   [](const RunConfig& c) { return std::to_string(c.field); }}
#define NUM_KEY(field) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }, \
   [](const RunConfig& c) { return format_number(c.field); }}
#define BOOL_KEY(field) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }, \
   [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = {
      {"seed",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"signal_scale", NUM_KEY(signal_scale)},
      {"schedule.kind",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.schedule_kind = parse_schedule_kind(v);
        },
        [](const RunConfig& c) { return to_string(c.schedule_kind); }}},
      {"schedule.beta_start", NUM_KEY(beta_range.first)},
      {"schedule.beta_end", NUM_KEY(beta_range.second)},
      {"model.L", INT_KEY(model.L)},
      {"model.D", INT_KEY(model.D)},
      {"model.C", INT_KEY(model.C)},
      {"model.window", INT_KEY(model.window)},
      {"model.decoder_layers", INT_KEY(model.decoder_layers)},
      {"model.decoder_dim", INT_KEY(model.decoder_dim)},
      {"model.heads", INT_KEY(model.heads)},
      {"model.t_embed_dim", INT_KEY(model.t_embed_dim)},
      {"model.ff_dim", INT_KEY(model.ff_dim)},
      {"model.condition",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.model.condition = parse_condition_source(v);
        },
        [](const RunConfig& c) { return to_string(c.model.condition); }}},
      {"train.profile",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.train = TrainConfig::profile(v);
          c.train_profile = v;
        },
        [](const RunConfig& c) { return c.train_profile; }}},
      {"train.T_train", INT_KEY(train.T_train)},
      {"train.cfg_drop_p", NUM_KEY(train.cfg_drop_p)},
      {"train.lr", NUM_KEY(train.lr)},
      {"train.weight_decay", NUM_KEY(train.weight_decay)},
      {"train.beta1", NUM_KEY(train.beta1)},
      {"train.beta2", NUM_KEY(train.beta2)},
      {"train.adam_eps", NUM_KEY(train.adam_eps)},
      {"train.batch_size", INT_KEY(train.batch_size)},
      {"train.epochs", INT_KEY(train.epochs)},
      {"train.smoothing_radius", INT_KEY(train.smoothing_radius)},
      {"sample.steps", INT_KEY(sample.steps)},
      {"sample.cfg_weight", NUM_KEY(sample.guidance_weight)},
      {"sample.num_predictions", INT_KEY(sample.num_predictions)},
      {"sample.eta", NUM_KEY(sample.eta)},
      {"sample.clamp", BOOL_KEY(sample.clamp)},
      {"postprocess.delta", NUM_KEY(postprocess.delta)},
      {"eval.rel_dis", NUM_KEY(eval.rel_dis)},
      {"eval.sweep", BOOL_KEY(eval_sweep)},
      {"sweep.weights",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.sweep_weights = to_list(k, v);
        },
        [](const RunConfig& c) { return list_text(c.sweep_weights); }}},
      {"data.num_videos", INT_KEY(data.num_videos)},
      {"data.L", INT_KEY(data.L)},
      {"data.D", INT_KEY(data.D)},
      {"data.segments_min", INT_KEY(data.segments_range.first)},
      {"data.segments_max", INT_KEY(data.segments_range.second)},
      {"data.min_segment", INT_KEY(data.min_segment)},
      {"data.feature_noise_sigma", NUM_KEY(data.feature_noise_sigma)},
      {"data.num_annotators", INT_KEY(data.num_annotators)},
      {"data.jitter_sigma", NUM_KEY(data.annotator_jitter_sigma)},
      {"data.drop_p", NUM_KEY(data.annotator_drop_p)},
      {"data.id_prefix",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.data.id_prefix = v; },
        [](const RunConfig& c) { return c.data.id_prefix; }}},
  };
  return table;
}

#undef INT_KEY
#undef NUM_KEY
#undef BOOL_KEY

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

RunConfig RunConfig::from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  const auto& table = key_table();
  RunConfig c;
  for (const auto& [k, v] : entries) {
    if (!table.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
  }
  // The profile resets every train.* field, so it goes first.
  for (const auto& [k, v] : entries) {
    if (k == "train.profile") table.at(k).set(c, k, v);
  }
  for (const auto& [k, v] : entries) {
    if (k != "train.profile") table.at(k).set(c, k, v);
  }
  return c;
}

void RunConfig::finalize() {
  if (!(signal_scale > 0.0)) throw ConfigError("signal_scale must be > 0");
  train.seed = seed;
  train.signal_scale = signal_scale;
  sample.seed = seed;
  sample.signal_scale = signal_scale;
  postprocess.signal_scale = signal_scale;
  data.seed = seed;
  if (eval_sweep) {
    eval.thresholds = rel_dis_sweep();
  } else {
    eval.thresholds.clear();
  }
  model.validate();
  train.validate();
  postprocess.validate();
  data.validate();
  if (sample.steps < 1 || sample.steps > train.T_train) {
    throw ConfigError("sample.steps must lie in [1, train.T_train]");
  }
  if (sample.num_predictions < 1) throw ConfigError("sample.num_predictions must be >= 1");
  if (!(sample.guidance_weight >= 0.0)) throw ConfigError("sample.cfg_weight must be >= 0");
  if (!(sample.eta >= 0.0)) throw ConfigError("sample.eta must be >= 0");
  if (!(eval.rel_dis > 0.0)) throw ConfigError("eval.rel_dis must be > 0");
  for (double w : sweep_weights) {
    if (!(w >= 0.0)) throw ConfigError("sweep.weights must be >= 0");
  }
  schedule();
}

NoiseSchedule RunConfig::schedule() const {
  return build_schedule(schedule_kind, train.T_train, beta_range);
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, key] : key_table()) out += k + " = " + key.get(*this) + "\n";
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : key_table()) out.push_back(k);
    return out;
  }();
  return names;
}

std::vector<std::pair<std::string, std::string>> read_config_entries(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace boundiff
