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

#include "boundiff/nn.h"

#include <cmath>

#include "boundiff/error.h"
#include "boundiff/rng.h"

namespace boundiff {

using ad::Tensor;

namespace {

constexpr size_t kConvKernel = 3;

std::string layer_prefix(int i) { return "dec.layer" + std::to_string(i) + "."; }

int parse_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("model key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

}  // namespace

ConditionSource parse_condition_source(const std::string& name) {
  if (name == "similarity") return ConditionSource::kSimilarity;
  if (name == "raw") return ConditionSource::kRaw;
  throw ConfigError("unknown condition source '" + name + "' (expected similarity|raw)");
}

std::string to_string(ConditionSource source) {
  return source == ConditionSource::kSimilarity ? "similarity" : "raw";
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(L, "L");
  positive(D, "D");
  positive(C, "C");
  positive(window, "window");
  positive(decoder_layers, "decoder_layers");
  positive(decoder_dim, "decoder_dim");
  positive(heads, "heads");
  positive(t_embed_dim, "t_embed_dim");
  positive(ff_dim, "ff_dim");
  if (decoder_dim % heads != 0) throw ConfigError("model.decoder_dim must be divisible by heads");
  if (t_embed_dim % 2 != 0) throw ConfigError("model.t_embed_dim must be even");
  if (decoder_dim % 2 != 0) throw ConfigError("model.decoder_dim must be even");
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_key_values() const {
  return {
      {"L", std::to_string(L)},
      {"D", std::to_string(D)},
      {"C", std::to_string(C)},
      {"window", std::to_string(window)},
      {"decoder_layers", std::to_string(decoder_layers)},
      {"decoder_dim", std::to_string(decoder_dim)},
      {"heads", std::to_string(heads)},
      {"t_embed_dim", std::to_string(t_embed_dim)},
      {"ff_dim", std::to_string(ff_dim)},
      {"condition", to_string(condition)},
  };
}

ModelConfig ModelConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  c.L = parse_int(kv, "L", c.L);
  c.D = parse_int(kv, "D", c.D);
  c.C = parse_int(kv, "C", c.C);
  c.window = parse_int(kv, "window", c.window);
  c.decoder_layers = parse_int(kv, "decoder_layers", c.decoder_layers);
  c.decoder_dim = parse_int(kv, "decoder_dim", c.decoder_dim);
  c.heads = parse_int(kv, "heads", c.heads);
  c.t_embed_dim = parse_int(kv, "t_embed_dim", c.t_embed_dim);
  c.ff_dim = parse_int(kv, "ff_dim", c.ff_dim);
  if (auto it = kv.find("condition"); it != kv.end()) c.condition = parse_condition_source(it->second);
  c.validate();
  return c;
}

size_t parameter_count(const ModelConfig& c) {
  const size_t d = c.decoder_dim;
  const size_t te = c.t_embed_dim;
  auto lin = [](size_t in, size_t out) { return in * out + out; };
  size_t n = 0;
  if (c.condition == ConditionSource::kSimilarity) {
    const size_t s = 2 * c.window + 1;
    n += lin(kConvKernel * c.D, c.D) + lin(s, c.C) + lin(c.C, c.C);
  }
  n += lin(1, d) + lin(d, d);
  n += lin(d + c.condition_dim(), d);
  n += lin(te, te) + lin(te, te);
  const size_t per_layer = 2 * d + (d * 3 * d + 2 * d) + lin(d, d) + lin(te, 2 * d) + 2 * d +
                           lin(d, c.ff_dim) + lin(c.ff_dim, d);
  n += per_layer * c.decoder_layers;
  n += 2 * d + lin(d, d) + lin(d, 1);
  return n;
}

std::vector<double> sinusoidal_embed(double value, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw ConfigError("sinusoidal_embed: dim must be a positive even number, got " +
                      std::to_string(dim));
  }
  const int half = dim / 2;
  std::vector<double> out(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    out[i] = std::sin(value * freq);
    out[half + i] = std::cos(value * freq);
  }
  return out;
}

Tensor self_similarity(const Tensor& features, int window) {
  if (window < 1) throw ConfigError("self_similarity: window must be >= 1");
  return ad::self_similarity(features, static_cast<size_t>(window));
}

// ---------------------------------------------------------------------------

DenoiserModel::DenoiserModel(const ModelConfig& config, uint64_t seed) : config_(config) {
  config_.validate();
  const size_t d = config_.decoder_dim;
  const size_t te = config_.t_embed_dim;
  const size_t D = config_.D;
  const size_t C = config_.C;
  uint64_t idx = 0;
  auto weight = [&](const std::string& name, size_t in, size_t out) {
    add_param(name, in, out, 1.0 / std::sqrt(static_cast<double>(in)), seed, idx++);
  };
  auto bias = [&](const std::string& name, size_t out) { add_param(name, 1, out, 0.0, seed, idx++); };
  auto constant = [&](const std::string& name, size_t out, double v) {
    add_param(name, 1, out, 0.0, seed, idx++);
    for (double& x : parameter(name).mutable_data()) x = v;
  };

  if (config_.condition == ConditionSource::kSimilarity) {
    const size_t s = 2 * config_.window + 1;
    weight("enc.conv.weight", kConvKernel * D, D);
    bias("enc.conv.bias", D);
    weight("enc.proj1.weight", s, C);
    bias("enc.proj1.bias", C);
    weight("enc.proj2.weight", C, C);
    bias("enc.proj2.bias", C);
  }
  weight("dec.in1.weight", 1, d);
  bias("dec.in1.bias", d);
  weight("dec.in2.weight", d, d);
  bias("dec.in2.bias", d);
  weight("dec.fuse.weight", d + config_.condition_dim(), d);
  bias("dec.fuse.bias", d);
  weight("dec.time1.weight", te, te);
  bias("dec.time1.bias", te);
  weight("dec.time2.weight", te, te);
  bias("dec.time2.bias", te);
  for (int i = 0; i < config_.decoder_layers; ++i) {
    const std::string pre = layer_prefix(i);
    constant(pre + "ln1.gamma", d, 1.0);
    constant(pre + "ln1.beta", d, 0.0);
    // No key bias: it shifts every score in a row equally and softmax drops it.
    weight(pre + "attn.qkv.weight", d, 3 * d);
    bias(pre + "attn.q.bias", d);
    bias(pre + "attn.v.bias", d);
    weight(pre + "attn.out.weight", d, d);
    bias(pre + "attn.out.bias", d);
    weight(pre + "film.weight", te, 2 * d);
    bias(pre + "film.bias", 2 * d);
    constant(pre + "ln2.gamma", d, 1.0);
    constant(pre + "ln2.beta", d, 0.0);
    weight(pre + "ff1.weight", d, config_.ff_dim);
    bias(pre + "ff1.bias", config_.ff_dim);
    weight(pre + "ff2.weight", config_.ff_dim, d);
    bias(pre + "ff2.bias", d);
  }
  constant("dec.ln_out.gamma", d, 1.0);
  constant("dec.ln_out.beta", d, 0.0);
  weight("dec.head1.weight", d, d);
  bias("dec.head1.bias", d);
  add_param("dec.head2.weight", d, 1, 0.0, seed, idx++);
  bias("dec.head2.bias", 1);

  position_ = Tensor::zeros(config_.L, d);
  for (int l = 0; l < config_.L; ++l) {
    const std::vector<double> e = sinusoidal_embed(l, static_cast<int>(d));
    for (size_t c = 0; c < d; ++c) position_.at(l, c) = e[c];
  }
}

void DenoiserModel::add_param(const std::string& name, size_t rows, size_t cols, double bound,
                              uint64_t seed, uint64_t index) {
  if (index_.count(name)) throw ModelError("duplicate parameter name '" + name + "'");
  std::vector<double> data(rows * cols, 0.0);
  if (bound > 0.0) {
    Rng rng = Rng::stream(seed, {0x5eedULL, index});
    for (double& v : data) v = (2.0 * rng.uniform() - 1.0) * bound;
  }
  index_[name] = params_.size();
  params_.push_back({name, Tensor({rows, cols}, std::move(data), true)});
}

Tensor& DenoiserModel::parameter(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("unknown parameter '" + name + "'");
  return params_[it->second].tensor;
}

const Tensor& DenoiserModel::parameter(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("unknown parameter '" + name + "'");
  return params_[it->second].tensor;
}

void DenoiserModel::set_requires_grad(bool value) {
  for (auto& np : params_) np.tensor.set_requires_grad(value);
}

void DenoiserModel::zero_grad() {
  for (auto& np : params_) np.tensor.zero_grad();
}

void DenoiserModel::disable_position_embedding() {
  for (double& v : position_.mutable_data()) v = 0.0;
}

ConditionEmbedding DenoiserModel::encode(const Tensor& features) const {
  if (static_cast<int>(features.rows()) != config_.L ||
      static_cast<int>(features.cols()) != config_.D) {
    throw ModelError("encode: features " + ad::to_string(features.shape()) + " but model expects (" +
                     std::to_string(config_.L) + "x" + std::to_string(config_.D) + ")");
  }
  if (config_.condition == ConditionSource::kRaw) return {features};
  Tensor h = ad::conv1d(features, p("enc.conv.weight"), p("enc.conv.bias"), kConvKernel);
  h = ad::self_similarity(h, static_cast<size_t>(config_.window));
  h = ad::gelu(ad::linear(h, p("enc.proj1.weight"), p("enc.proj1.bias")));
  h = ad::linear(h, p("enc.proj2.weight"), p("enc.proj2.bias"));
  return {h};
}

Tensor DenoiserModel::denoise(const Tensor& y_t, int t, const ConditionEmbedding* condition) const {
  const size_t L = config_.L;
  const size_t d = config_.decoder_dim;
  if (y_t.rows() != L || y_t.cols() != 1) {
    throw ModelError("denoise: y_t " + ad::to_string(y_t.shape()) + " but model expects (" +
                     std::to_string(L) + "x1)");
  }
  Tensor cond;
  if (condition != nullptr) {
    cond = condition->E;
    if (cond.rows() != L || static_cast<int>(cond.cols()) != config_.condition_dim()) {
      throw ModelError("denoise: condition " + ad::to_string(cond.shape()) + " but model expects (" +
                       std::to_string(L) + "x" + std::to_string(config_.condition_dim()) + ")");
    }
  } else {
    cond = Tensor::zeros(L, config_.condition_dim());
  }

  Tensor x = ad::gelu(ad::linear(y_t, p("dec.in1.weight"), p("dec.in1.bias")));
  x = ad::linear(x, p("dec.in2.weight"), p("dec.in2.bias"));
  x = ad::linear(ad::concat_cols({x, cond}), p("dec.fuse.weight"), p("dec.fuse.bias"));
  x = ad::add(x, position_);

  const std::vector<double> temb = sinusoidal_embed(static_cast<double>(t), config_.t_embed_dim);
  Tensor time({1, temb.size()}, temb);
  time = ad::gelu(ad::linear(time, p("dec.time1.weight"), p("dec.time1.bias")));
  time = ad::gelu(ad::linear(time, p("dec.time2.weight"), p("dec.time2.bias")));

  const size_t heads = config_.heads;
  const size_t hd = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
  for (int i = 0; i < config_.decoder_layers; ++i) {
    const std::string pre = layer_prefix(i);
    Tensor h = ad::layer_norm(x, p(pre + "ln1.gamma"), p(pre + "ln1.beta"));
    const Tensor qkv = ad::matmul(h, p(pre + "attn.qkv.weight"));
    const Tensor q_all = ad::add(ad::slice_cols(qkv, 0, d), p(pre + "attn.q.bias"));
    const Tensor k_all = ad::slice_cols(qkv, d, d);
    const Tensor v_all = ad::add(ad::slice_cols(qkv, 2 * d, d), p(pre + "attn.v.bias"));
    std::vector<Tensor> head_out;
    head_out.reserve(heads);
    for (size_t k = 0; k < heads; ++k) {
      Tensor q = ad::slice_cols(q_all, k * hd, hd);
      Tensor kk = ad::slice_cols(k_all, k * hd, hd);
      Tensor v = ad::slice_cols(v_all, k * hd, hd);
      Tensor att = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(kk)), att_scale));
      head_out.push_back(ad::matmul(att, v));
    }
    Tensor attn = ad::linear(ad::concat_cols(head_out), p(pre + "attn.out.weight"),
                             p(pre + "attn.out.bias"));
    x = ad::add(x, attn);

    Tensor film = ad::linear(time, p(pre + "film.weight"), p(pre + "film.bias"));
    h = ad::layer_norm(x, p(pre + "ln2.gamma"), p(pre + "ln2.beta"));
    h = ad::scale_shift(h, ad::slice_cols(film, 0, d), ad::slice_cols(film, d, d));
    h = ad::gelu(ad::linear(h, p(pre + "ff1.weight"), p(pre + "ff1.bias")));
    h = ad::linear(h, p(pre + "ff2.weight"), p(pre + "ff2.bias"));
    x = ad::add(x, h);
  }
  x = ad::layer_norm(x, p("dec.ln_out.gamma"), p("dec.ln_out.beta"));
  x = ad::gelu(ad::linear(x, p("dec.head1.weight"), p("dec.head1.bias")));
  return ad::linear(x, p("dec.head2.weight"), p("dec.head2.bias"));
}

BoundarySignal DenoiserModel::predict(const BoundarySignal& y_t, int t,
                                      const ConditionEmbedding* condition) const {
  Tensor in({y_t.size(), 1}, y_t.values);
  Tensor out = denoise(in, t, condition);
  return {std::vector<double>(out.data().begin(), out.data().end()), y_t.scale};
}

}  // namespace boundiff
