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


// boundiff: generate synthetic data, train, sample, evaluate, sweep guidance.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 model or
// numeric error.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "boundiff/commands.h"
#include "boundiff/error.h"
#include "boundiff/run_config.h"

namespace {

using boundiff::RunConfig;
using Entries = std::vector<std::pair<std::string, std::string>>;

struct SharedFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::vector<std::string> sets;
};

void add_shared(CLI::App* cmd, SharedFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value run configuration file");
  cmd->add_option("--seed", flags.seed, "Overrides seed");
  cmd->add_option("--set", flags.sets, "Extra key=value override (repeatable)");
}

RunConfig resolve(const SharedFlags& flags, const Entries& overrides) {
  Entries entries;
  if (!flags.config_path.empty()) entries = boundiff::read_config_entries(flags.config_path);
  if (flags.seed) entries.emplace_back("seed", std::to_string(*flags.seed));
  for (const std::string& s : flags.sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw boundiff::ConfigError("--set expects key=value, got " + s);
    entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  RunConfig config = RunConfig::from_entries(entries);
  config.finalize();
  return config;
}

template <typename T>
void push_if(Entries& out, const std::string& key, const std::optional<T>& value) {
  if (!value) return;
  if constexpr (std::is_same_v<T, double>) {
    out.emplace_back(key, boundiff::format_number(*value));
  } else if constexpr (std::is_same_v<T, std::string>) {
    out.emplace_back(key, *value);
  } else {
    out.emplace_back(key, std::to_string(*value));
  }
}

int exit_code_for(const boundiff::Error& e) {
  if (dynamic_cast<const boundiff::ConfigError*>(&e) || dynamic_cast<const boundiff::ArgumentError*>(&e)) {
    return 1;
  }
  if (dynamic_cast<const boundiff::DataError*>(&e)) return 2;
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based generic event boundary detection"};
  app.require_subcommand(1);

  SharedFlags shared;
  std::string out_dir;
  std::string data_dir;
  std::string checkpoint;
  std::string predictions;
  std::string annotations;
  bool resume = false;
  std::optional<int> epochs;
  std::optional<std::string> profile;
  std::optional<int> steps;
  std::optional<double> cfg_weight;
  std::optional<int> num_predictions;
  std::optional<double> delta;
  std::optional<double> rel_dis;
  std::optional<std::string> weights;
  bool sweep = false;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic multi-annotator dataset");
  add_shared(gen, shared);
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train the denoiser");
  add_shared(train, shared);
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_flag("--resume", resume, "Continue from <out>/checkpoint_final.ckpt");
  train->add_option("--epochs", epochs, "Overrides train.epochs");
  train->add_option("--profile", profile, "Training profile: desk or paper");

  auto* sample = app.add_subcommand("sample", "Sample boundary predictions");
  add_shared(sample, shared);
  sample->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  sample->add_option("--data", data_dir, "Dataset directory")->required();
  sample->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate predictions against annotations");
  add_shared(eval, shared);
  eval->add_option("--predictions", predictions, "Prediction records (.jsonl)")->required();
  eval->add_option("--annotations", annotations, "Annotation records (.jsonl)")->required();
  eval->add_option("--out", out_dir, "Output directory")->required();
  eval->add_option("--rel-dis", rel_dis, "Overrides eval.rel_dis");
  eval->add_flag("--sweep", sweep, "Report every threshold 0.05..0.50");

  auto* sweep_cfg = app.add_subcommand("sweep-cfg", "Sample and evaluate across guidance weights");
  add_shared(sweep_cfg, shared);
  sweep_cfg->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  sweep_cfg->add_option("--data", data_dir, "Dataset directory")->required();
  sweep_cfg->add_option("--out", out_dir, "Output directory")->required();
  sweep_cfg->add_option("--weights", weights, "Comma-separated guidance weights");
  sweep_cfg->add_option("--rel-dis", rel_dis, "Overrides eval.rel_dis");

  for (CLI::App* cmd : {sample, sweep_cfg}) {
    cmd->add_option("--steps", steps, "Overrides sample.steps");
    cmd->add_option("--num-predictions", num_predictions, "Overrides sample.num_predictions");
    cmd->add_option("--delta", delta, "Overrides postprocess.delta");
  }
  sample->add_option("--cfg-weight", cfg_weight, "Overrides sample.cfg_weight");

  auto* show = app.add_subcommand("print-config", "Print the effective configuration");
  add_shared(show, shared);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Entries overrides;
  push_if(overrides, "train.profile", profile);
  push_if(overrides, "train.epochs", epochs);
  push_if(overrides, "sample.steps", steps);
  push_if(overrides, "sample.cfg_weight", cfg_weight);
  push_if(overrides, "sample.num_predictions", num_predictions);
  push_if(overrides, "postprocess.delta", delta);
  push_if(overrides, "eval.rel_dis", rel_dis);
  push_if(overrides, "sweep.weights", weights);
  if (sweep) overrides.emplace_back("eval.sweep", "true");

  try {
    const RunConfig config = resolve(shared, overrides);
    if (gen->parsed()) {
      boundiff::cmd_gen_data(config, out_dir);
    } else if (train->parsed()) {
      boundiff::cmd_train(config, data_dir, out_dir, resume, std::cout);
    } else if (sample->parsed()) {
      boundiff::cmd_sample(config, checkpoint, data_dir, out_dir);
    } else if (eval->parsed()) {
      boundiff::cmd_eval(config, predictions, annotations, out_dir, std::cout);
    } else if (sweep_cfg->parsed()) {
      boundiff::cmd_sweep_cfg(config, checkpoint, data_dir, out_dir, std::cout);
    } else if (show->parsed()) {
      std::cout << config.to_text();
    }
  } catch (const boundiff::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
