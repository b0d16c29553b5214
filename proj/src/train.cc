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


#include "boundiff/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "boundiff/diffusion.h"
#include "boundiff/error.h"
#include "boundiff/le_bytes.h"

namespace boundiff {

namespace fs = std::filesystem;
using ad::Tensor;

namespace {

constexpr const char* kCheckpointMagic = "boundiff-checkpoint 1";

Tensor column(const BoundarySignal& s) { return Tensor({s.size(), 1}, s.values); }

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (T_train < 1) throw ConfigError("train.T_train must be >= 1");
  if (!(cfg_drop_p >= 0.0 && cfg_drop_p <= 1.0)) throw ConfigError("train.cfg_drop_p must lie in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(signal_scale > 0.0)) throw ConfigError("train.signal_scale must be > 0");
  if (smoothing_radius < 0) throw ConfigError("train.smoothing_radius must be >= 0");
}

TrainConfig TrainConfig::profile(const std::string& name) {
  TrainConfig c;
  if (name == "paper") return c;
  if (name == "desk") {
    c.lr = 1e-3;
    c.batch_size = 16;
    c.epochs = 30;
    return c;
  }
  throw ConfigError("unknown train profile \"" + name + "\" (expected paper or desk)");
}

OptimizerState OptimizerState::for_model(const DenoiserModel& model) {
  OptimizerState s;
  for (const NamedParameter& p : model.parameters()) {
    s.m.emplace_back(p.tensor.numel(), 0.0);
    s.v.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

BoundarySignal to_signal(const BoundarySet& boundaries, double scale, int radius) {
  BoundarySignal s;
  s.scale = scale;
  s.values.assign(boundaries.L(), -scale);
  for (int f : boundaries.frames()) {
    const int lo = std::max(0, f - radius);
    const int hi = std::min(boundaries.L() - 1, f + radius);
    for (int l = lo; l <= hi; ++l) s.values[l] = scale;
  }
  return s;
}

void adamw_update(std::vector<NamedParameter>& params, OptimizerState& opt,
                  const TrainConfig& cfg) {
  if (opt.m.size() != params.size() || opt.v.size() != params.size()) {
    throw ArgumentError("optimizer state has " + std::to_string(opt.m.size()) +
                        " slots for " + std::to_string(params.size()) + " parameters");
  }
  ++opt.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].tensor;
    auto x = p.mutable_data();
    auto& m = opt.m[i];
    auto& v = opt.v[i];
    if (m.size() != x.size() || v.size() != x.size()) {
      throw ArgumentError("optimizer moments do not match " + params[i].name);
    }
    const bool has = p.has_grad();
    const std::vector<double> g = has ? p.grad() : std::vector<double>();
    for (size_t k = 0; k < x.size(); ++k) {
      const double gk = has ? g[k] : 0.0;
      x[k] *= decay;
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      x[k] -= cfg.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.adam_eps);
    }
  }
}

double train_step(DenoiserModel& model, OptimizerState& opt, const std::vector<TrainItem>& batch,
                  const NoiseSchedule& schedule, const TrainConfig& cfg, Rng& rng) {
  if (batch.empty()) throw ArgumentError("train_step: empty batch");
  if (schedule.T != cfg.T_train) {
    throw ConfigError("schedule has T=" + std::to_string(schedule.T) + " but train.T_train=" +
                      std::to_string(cfg.T_train));
  }
  model.set_requires_grad(true);
  model.zero_grad();
  ad::Tape tape;
  Tensor total;
  std::vector<int> drawn_t;
  {
    ad::TapeScope scope(tape);
    for (const TrainItem& item : batch) {
      const int t = static_cast<int>(rng.uniform_int(1, cfg.T_train));
      const BoundarySignal eps = gaussian_signal(item.y0.size(), rng);
      const bool drop = rng.bernoulli(cfg.cfg_drop_p);
      drawn_t.push_back(t);
      const BoundarySignal y_t = corrupt(item.y0, t, eps, schedule);
      Tensor out;
      if (drop) {
        out = model.denoise(column(y_t), t, nullptr);
      } else {
        const ConditionEmbedding E = model.encode(item.features);
        out = model.denoise(column(y_t), t, &E);
      }
      Tensor loss = ad::mse(out, column(item.y0));
      total = total.defined() ? ad::add(total, loss) : loss;
    }
    total = ad::scale(total, 1.0 / static_cast<double>(batch.size()));
  }
  const double loss = total.item();
  if (!std::isfinite(loss)) {
    std::string ts;
    for (int t : drawn_t) ts += " " + std::to_string(t);
    throw TrainingError("non-finite loss " + format_double(loss) + " at optimizer step " +
                        std::to_string(opt.step + 1) + " (batch of " +
                        std::to_string(batch.size()) + ", t:" + ts + ")");
  }
  tape.backward(total);
  adamw_update(model.parameters(), opt, cfg);
  return loss;
}

AnnotationCursor::AnnotationCursor(const Dataset& dataset) {
  if (dataset.videos.empty()) throw ConfigError("training dataset is empty");
  size_t rounds = 0;
  for (const VideoRecord& v : dataset.videos) {
    if (v.annotations.empty()) throw DataError("video " + v.id + " has no annotations");
    rounds = std::max(rounds, v.annotations.size());
  }
  for (size_t r = 0; r < rounds; ++r) {
    for (size_t i = 0; i < dataset.videos.size(); ++i) {
      if (r < dataset.videos[i].annotations.size()) pairs_.push_back({i, r});
    }
  }
}

std::vector<AnnotationPair> AnnotationCursor::epoch_order(Rng& rng) const {
  std::vector<AnnotationPair> order = pairs_;
  rng.shuffle(order);
  return order;
}

double train_epoch(DenoiserModel& model, OptimizerState& opt, const Dataset& dataset,
                   const NoiseSchedule& schedule, const TrainConfig& cfg, int epoch,
                   const StepCallback& on_step) {
  cfg.validate();
  const AnnotationCursor cursor(dataset);
  Rng rng = Rng::stream(cfg.seed, {static_cast<uint64_t>(epoch)});
  const std::vector<AnnotationPair> order = cursor.epoch_order(rng);
  double weighted = 0.0;
  for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
    std::vector<TrainItem> batch;
    for (size_t k = start; k < end; ++k) {
      const VideoRecord& v = dataset.videos[order[k].video];
      batch.push_back({v.features, to_signal(v.annotations[order[k].annotation],
                                             cfg.signal_scale, cfg.smoothing_radius)});
    }
    const double loss = train_step(model, opt, batch, schedule, cfg, rng);
    weighted += loss * static_cast<double>(batch.size());
    if (on_step) on_step(opt.step, loss);
  }
  return weighted / static_cast<double>(order.size());
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const DenoiserModel& model, const OptimizerState& opt,
                     const std::map<std::string, std::string>& meta, const fs::path& path) {
  const auto& params = model.parameters();
  if (opt.m.size() != params.size() || opt.v.size() != params.size()) {
    throw CheckpointError("optimizer state does not match the model's parameter list");
  }
  std::ostringstream manifest;
  manifest << kCheckpointMagic << '\n';
  for (const auto& [k, v] : model.config().to_key_values()) manifest << "model." << k << '=' << v << '\n';
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw CheckpointError("meta entry \"" + k + "\" contains a reserved character");
    }
    manifest << "meta." << k << '=' << v << '\n';
  }
  manifest << "step=" << opt.step << '\n';

  std::string blob;
  auto emit = [&](const std::string& name, size_t rows, size_t cols, const std::vector<double>& data) {
    manifest << "tensor " << name << ' ' << rows << 'x' << cols << ' ' << blob.size() << '\n';
    for (double x : data) le::put_f64(blob, x);
  };
  for (const NamedParameter& p : params) {
    const auto d = p.tensor.data();
    emit(p.name, p.tensor.rows(), p.tensor.cols(), std::vector<double>(d.begin(), d.end()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    emit("adam.m:" + params[i].name, params[i].tensor.rows(), params[i].tensor.cols(), opt.m[i]);
    emit("adam.v:" + params[i].name, params[i].tensor.rows(), params[i].tensor.cols(), opt.v[i]);
  }
  manifest << "end\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  const std::string head = manifest.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const std::string where = path.string();

  struct Entry {
    size_t rows, cols, offset;
  };
  std::map<std::string, std::string> model_kv;
  std::map<std::string, std::string> meta;
  std::map<std::string, Entry> entries;
  int64_t step = -1;
  size_t pos = 0;
  bool ended = false;
  int lineno = 0;
  auto next_line = [&]() -> std::string {
    const size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError(where + ": manifest is not terminated by 'end'");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    return line;
  };
  if (next_line() != kCheckpointMagic) throw CheckpointError(where + ": not a boundiff checkpoint");
  while (!ended) {
    const std::string line = next_line();
    const std::string at = where + ":" + std::to_string(lineno);
    if (line == "end") {
      ended = true;
    } else if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ls(line.substr(7));
      std::string name, shape;
      size_t offset = 0;
      if (!(ls >> name >> shape >> offset)) throw CheckpointError(at + ": malformed tensor line");
      size_t rows = 0, cols = 0;
      char x = 0;
      std::istringstream shs(shape);
      if (!(shs >> rows >> x >> cols) || x != 'x' || !shs.eof()) {
        throw CheckpointError(at + ": malformed shape \"" + shape + "\" for " + name);
      }
      if (!entries.emplace(name, Entry{rows, cols, offset}).second) {
        throw CheckpointError(at + ": duplicate tensor " + name);
      }
    } else if (line.rfind("step=", 0) == 0) {
      try {
        size_t used = 0;
        step = std::stoll(line.substr(5), &used);
        if (used != line.size() - 5 || step < 0) throw std::invalid_argument("step");
      } catch (const std::exception&) {
        throw CheckpointError(at + ": malformed step counter");
      }
    } else if (const size_t eq = line.find('='); eq != std::string::npos) {
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key.rfind("model.", 0) == 0) {
        model_kv[key.substr(6)] = value;
      } else if (key.rfind("meta.", 0) == 0) {
        meta[key.substr(5)] = value;
      } else {
        throw CheckpointError(at + ": unknown manifest key " + key);
      }
    } else {
      throw CheckpointError(at + ": malformed manifest line");
    }
  }
  if (step < 0) throw CheckpointError(where + ": missing step counter");
  const size_t blob_start = pos;
  const size_t blob_size = bytes.size() - blob_start;

  ModelConfig config;
  try {
    config = ModelConfig::from_key_values(model_kv);
  } catch (const Error& e) {
    throw CheckpointError(where + ": bad model config: " + e.what());
  }
  Checkpoint ck;
  ck.model = std::make_unique<DenoiserModel>(config, 0);
  ck.meta = std::move(meta);
  ck.opt = OptimizerState::for_model(*ck.model);
  ck.opt.step = step;

  auto read_into = [&](const std::string& name, size_t rows, size_t cols, std::span<double> dst) {
    auto it = entries.find(name);
    if (it == entries.end()) throw CheckpointError(where + ": missing tensor " + name);
    const Entry& e = it->second;
    if (e.rows != rows || e.cols != cols) {
      throw CheckpointError(where + ": tensor " + name + " has shape " + std::to_string(e.rows) +
                            "x" + std::to_string(e.cols) + ", model expects " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
    const size_t need = 8 * rows * cols;
    if (e.offset > blob_size || blob_size - e.offset < need) {
      throw CheckpointError(where + ": data for tensor " + name + " is truncated");
    }
    for (size_t k = 0; k < dst.size(); ++k) dst[k] = le::get_f64(bytes, blob_start + e.offset + 8 * k);
    entries.erase(it);
  };
  auto& params = ck.model->parameters();
  for (NamedParameter& p : params) {
    read_into(p.name, p.tensor.rows(), p.tensor.cols(), p.tensor.mutable_data());
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const size_t r = params[i].tensor.rows();
    const size_t c = params[i].tensor.cols();
    read_into("adam.m:" + params[i].name, r, c, ck.opt.m[i]);
    read_into("adam.v:" + params[i].name, r, c, ck.opt.v[i]);
  }
  if (!entries.empty()) {
    throw CheckpointError(where + ": unexpected tensor " + entries.begin()->first);
  }
  for (const NamedParameter& p : params) {
    for (double x : p.tensor.data()) {
      if (!std::isfinite(x)) throw CheckpointError(where + ": non-finite value in " + p.name);
    }
  }
  return ck;
}

}  // namespace boundiff
