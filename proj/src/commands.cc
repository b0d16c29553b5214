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


#include "boundiff/commands.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "boundiff/error.h"
#include "boundiff/train.h"

namespace boundiff {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFinalCheckpoint = "checkpoint_final.ckpt";
constexpr const char* kBestCheckpoint = "checkpoint_best.ckpt";

void prepare_out_dir(const RunConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream out(out_dir / "effective_config.txt", std::ios::binary);
  if (!out) throw DataError("cannot write " + (out_dir / "effective_config.txt").string());
  out << config.to_text();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string model_signature(const ModelConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.to_key_values()) out += k + "=" + v + " ";
  return out;
}

// Loads a checkpoint and checks it against the run's model and schedule.
Checkpoint load_for_run(const RunConfig& config, const fs::path& path) {
  Checkpoint ck = load_checkpoint(path);
  const ModelConfig& have = ck.model->config();
  if (model_signature(have) != model_signature(config.model)) {
    throw ModelError("checkpoint " + path.string() + " was trained with model [" +
                     model_signature(have) + "] but the run config has [" +
                     model_signature(config.model) + "]");
  }
  auto expect = [&](const char* key, const std::string& want) {
    auto it = ck.meta.find(key);
    if (it != ck.meta.end() && it->second != want) {
      throw ModelError("checkpoint " + path.string() + " has " + key + "=" + it->second +
                       " but the run config has " + want);
    }
  };
  expect("schedule", to_string(config.schedule_kind));
  expect("T_train", std::to_string(config.train.T_train));
  return ck;
}

std::string metric_columns() { return "F1\tF1_p2g\tF1_g2p\tF1_sym\tDiversity\tGED"; }

std::string metric_row(const MetricValues& v) {
  return format_number(v.f1) + "\t" + format_number(v.f1_p2g) + "\t" + format_number(v.f1_g2p) +
         "\t" + format_number(v.f1_sym) + "\t" + format_number(v.diversity) + "\t" +
         format_number(v.ged);
}

}  // namespace

int thread_count() {
  if (const char* env = std::getenv("BOUNDIFF_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
      throw ConfigError(std::string("BOUNDIFF_THREADS must be a positive integer, got \"") + env + "\"");
    }
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

uint64_t video_sample_seed(uint64_t seed, const std::string& video_id) {
  return derive_key(seed, {fnv1a(video_id)});
}

void check_dataset_fits(const Dataset& dataset, const ModelConfig& model) {
  for (const VideoRecord& v : dataset.videos) {
    if (static_cast<int>(v.features.rows()) != model.L ||
        static_cast<int>(v.features.cols()) != model.D) {
      throw ModelError("video " + v.id + " has features " + std::to_string(v.features.rows()) +
                       "x" + std::to_string(v.features.cols()) + " but the model expects " +
                       std::to_string(model.L) + "x" + std::to_string(model.D));
    }
  }
}

std::vector<std::vector<BoundarySet>> sample_boundaries(const Dataset& dataset,
                                                        const DenoiserFor& denoiser,
                                                        const ConditionFor& condition,
                                                        const NoiseSchedule& schedule,
                                                        const SampleConfig& sample,
                                                        const PostprocessConfig& post,
                                                        int threads) {
  const size_t n = dataset.videos.size();
  std::vector<std::vector<BoundarySet>> out(n);
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&]() {
    for (size_t i = next++; i < n; i = next++) {
      try {
        SampleConfig cfg = sample;
        cfg.seed = video_sample_seed(sample.seed, dataset.videos[i].id);
        const ConditionEmbedding cond = condition(i);
        for (const BoundarySignal& s : sample_many(denoiser(i), cond, schedule, cfg)) {
          out[i].push_back(binarize_runs(s, post));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<std::vector<BoundarySet>> sample_boundaries(const DenoiserModel& model,
                                                        const Dataset& dataset,
                                                        const NoiseSchedule& schedule,
                                                        const SampleConfig& sample,
                                                        const PostprocessConfig& post,
                                                        int threads) {
  check_dataset_fits(dataset, model.config());
  return sample_boundaries(
      dataset, [&](size_t) -> const Denoiser& { return model; },
      [&](size_t i) { return model.encode(dataset.videos[i].features); }, schedule, sample, post,
      threads);
}

std::map<std::string, std::vector<BoundarySet>> by_video(
    const Dataset& dataset, const std::vector<std::vector<BoundarySet>>& sets) {
  std::map<std::string, std::vector<BoundarySet>> out;
  for (size_t i = 0; i < dataset.videos.size(); ++i) out[dataset.videos[i].id] = sets.at(i);
  return out;
}

// ---------------------------------------------------------------------------

void cmd_gen_data(const RunConfig& config, const fs::path& out_dir) {
  prepare_out_dir(config, out_dir);
  const SyntheticData synth = generate_synthetic(config.data);
  write_dataset(synth.dataset, out_dir);
  std::vector<BoundaryRecord> truth;
  for (size_t i = 0; i < synth.dataset.videos.size(); ++i) {
    truth.push_back({synth.dataset.videos[i].id, "gt", 0, synth.latent_truth[i]});
  }
  write_records(out_dir / "latent_truth.jsonl", truth);
  std::ostringstream manifest;
  manifest << "seed = " << config.data.seed << "\n"
           << "num_videos = " << config.data.num_videos << "\n"
           << "L = " << config.data.L << "\n"
           << "D = " << config.data.D << "\n"
           << "num_annotators = " << config.data.num_annotators << "\n"
           << "features = features/<video_id>.dbf\n"
           << "annotations = annotations.jsonl\n"
           << "latent_truth = latent_truth.jsonl\n";
  write_text(out_dir / "manifest.txt", manifest.str());
}

void cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& out_dir,
               bool resume, std::ostream& log) {
  prepare_out_dir(config, out_dir);
  const Dataset dataset = read_dataset(data_dir);
  check_dataset_fits(dataset, config.model);
  const NoiseSchedule schedule = config.schedule();

  std::unique_ptr<DenoiserModel> model;
  OptimizerState opt;
  int epochs_done = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::string> rows;
  if (resume) {
    Checkpoint ck = load_for_run(config, out_dir / kFinalCheckpoint);
    model = std::move(ck.model);
    opt = std::move(ck.opt);
    try {
      epochs_done = std::stoi(ck.meta.at("epochs_done"));
      best_loss = std::stod(ck.meta.at("best_loss"));
    } catch (const std::exception&) {
      throw CheckpointError((out_dir / kFinalCheckpoint).string() +
                            ": missing or malformed epochs_done/best_loss");
    }
    std::ifstream in(out_dir / "metrics.tsv");
    std::string line;
    std::getline(in, line);
    while (static_cast<int>(rows.size()) < epochs_done && std::getline(in, line)) rows.push_back(line);
    if (static_cast<int>(rows.size()) != epochs_done) {
      throw DataError((out_dir / "metrics.tsv").string() + " has fewer rows than the checkpoint's " +
                      std::to_string(epochs_done) + " epochs");
    }
  } else {
    model = std::make_unique<DenoiserModel>(config.model, config.seed);
    opt = OptimizerState::for_model(*model);
  }

  std::ofstream train_log(out_dir / "train_log.txt", resume ? std::ios::app : std::ios::trunc);
  const auto started = std::chrono::steady_clock::now();
  auto wall = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  auto emit = [&](const std::string& line) {
    log << line << '\n' << std::flush;
    train_log << line << '\n' << std::flush;
  };
  auto meta_for = [&](int done) {
    return std::map<std::string, std::string>{{"epochs_done", std::to_string(done)},
                                              {"best_loss", format_number(best_loss)},
                                              {"schedule", to_string(config.schedule_kind)},
                                              {"T_train", std::to_string(config.train.T_train)},
                                              {"seed", std::to_string(config.seed)}};
  };
  auto write_metrics = [&]() {
    std::string text = "epoch\tsteps\tloss\n";
    for (const std::string& r : rows) text += r + "\n";
    write_text(out_dir / "metrics.tsv", text);
  };
  write_metrics();

  for (int epoch = epochs_done; epoch < config.train.epochs; ++epoch) {
    const double loss = train_epoch(*model, opt, dataset, schedule, config.train, epoch);
    std::ostringstream line;
    line << "epoch=" << epoch + 1 << " step=" << opt.step << " loss=" << format_number(loss)
         << " wall_s=" << std::fixed << std::setprecision(2) << wall();
    emit(line.str());
    rows.push_back(std::to_string(epoch + 1) + "\t" + std::to_string(opt.step) + "\t" +
                   format_number(loss));
    write_metrics();
    const bool improved = loss < best_loss;
    if (improved) best_loss = loss;
    save_checkpoint(*model, opt, meta_for(epoch + 1), out_dir / kFinalCheckpoint);
    if (improved) save_checkpoint(*model, opt, meta_for(epoch + 1), out_dir / kBestCheckpoint);
  }
  if (epochs_done >= config.train.epochs && !fs::exists(out_dir / kFinalCheckpoint)) {
    save_checkpoint(*model, opt, meta_for(epochs_done), out_dir / kFinalCheckpoint);
  }
}

void cmd_sample(const RunConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
                const fs::path& out_dir) {
  prepare_out_dir(config, out_dir);
  const Checkpoint ck = load_for_run(config, checkpoint);
  const Dataset dataset = read_dataset(data_dir);
  const auto sets = sample_boundaries(*ck.model, dataset, config.schedule(), config.sample,
                                      config.postprocess, thread_count());
  std::vector<BoundaryRecord> records;
  for (size_t i = 0; i < dataset.videos.size(); ++i) {
    for (size_t k = 0; k < sets[i].size(); ++k) {
      records.push_back({dataset.videos[i].id, "pred", static_cast<int>(k), sets[i][k]});
    }
  }
  write_records(out_dir / "predictions.jsonl", records);
}

EvalReport cmd_eval(const RunConfig& config, const fs::path& predictions,
                    const fs::path& annotations, const fs::path& out_dir, std::ostream& log) {
  prepare_out_dir(config, out_dir);
  const auto preds = group_records(read_records(predictions));
  const auto gts = group_records(read_records(annotations));
  const EvalReport report = evaluate_dataset(preds, gts, config.eval);

  std::string per_video;
  for (const VideoReport& r : report.per_video) {
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    j["rel_dis"] = r.rel_dis;
    j["F1"] = r.values.f1;
    j["F1_p2g"] = r.values.f1_p2g;
    j["F1_g2p"] = r.values.f1_g2p;
    j["F1_sym"] = r.values.f1_sym;
    j["Diversity"] = r.values.diversity;
    j["GED"] = r.values.ged;
    per_video += j.dump() + "\n";
  }
  write_text(out_dir / "eval_per_video.jsonl", per_video);

  std::string summary = "rel_dis\t" + metric_columns() + "\n";
  for (const auto& [tau, v] : report.summary) summary += format_number(tau) + "\t" + metric_row(v) + "\n";
  write_text(out_dir / "eval_summary.tsv", summary);
  log << summary;
  return report;
}

void cmd_sweep_cfg(const RunConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
                   const fs::path& out_dir, std::ostream& log) {
  prepare_out_dir(config, out_dir);
  const Checkpoint ck = load_for_run(config, checkpoint);
  const Dataset dataset = read_dataset(data_dir);
  const NoiseSchedule schedule = config.schedule();
  const auto gts = dataset.annotation_map();
  EvalConfig eval;
  eval.rel_dis = config.eval.rel_dis;

  std::vector<MetricValues> results;
  std::string table = "w\tF1_sym\tF1_p2g\tF1_g2p\tDiversity\tGED\n";
  for (double w : config.sweep_weights) {
    SampleConfig sample = config.sample;
    sample.guidance_weight = w;
    const auto sets =
        sample_boundaries(*ck.model, dataset, schedule, sample, config.postprocess, thread_count());
    const EvalReport report = evaluate_dataset(by_video(dataset, sets), gts, eval);
    const MetricValues& v = report.summary.begin()->second;
    results.push_back(v);
    const std::string row = format_number(w) + "\t" + format_number(v.f1_sym) + "\t" +
                            format_number(v.f1_p2g) + "\t" + format_number(v.f1_g2p) + "\t" +
                            format_number(v.diversity) + "\t" + format_number(v.ged);
    table += row + "\n";
    log << row << '\n' << std::flush;
  }
  write_text(out_dir / "sweep.tsv", table);

  // One block per metric, blank-line separated: "w value" pairs.
  const std::vector<std::pair<std::string, double MetricValues::*>> series = {
      {"F1_sym", &MetricValues::f1_sym},       {"F1_p2g", &MetricValues::f1_p2g},
      {"F1_g2p", &MetricValues::f1_g2p},       {"Diversity", &MetricValues::diversity},
      {"GED", &MetricValues::ged}};
  std::string plot;
  for (const auto& [name, field] : series) {
    plot += "# " + name + "\n";
    for (size_t i = 0; i < results.size(); ++i) {
      plot += format_number(config.sweep_weights[i]) + " " + format_number(results[i].*field) + "\n";
    }
    plot += "\n";
  }
  write_text(out_dir / "sweep_plot.dat", plot);
}

}  // namespace boundiff
