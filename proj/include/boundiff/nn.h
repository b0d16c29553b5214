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

#ifndef BOUNDIFF_NN_H_
#define BOUNDIFF_NN_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boundiff/autodiff.h"
#include "boundiff/signal.h"

namespace boundiff {

// What the decoder is conditioned on: the self-similarity embedding E, or
// the raw features F (ablation).
enum class ConditionSource { kSimilarity, kRaw };

ConditionSource parse_condition_source(const std::string& name);
std::string to_string(ConditionSource source);

struct ModelConfig {
  int L = 100;
  int D = 16;
  int C = 32;
  int window = 5;
  int decoder_layers = 2;
  int decoder_dim = 64;
  int heads = 4;
  int t_embed_dim = 64;
  int ff_dim = 128;
  ConditionSource condition = ConditionSource::kSimilarity;

  // Columns of the condition matrix handed to the decoder.
  int condition_dim() const { return condition == ConditionSource::kSimilarity ? C : D; }

  // Throws ConfigError when a dimension is non-positive, decoder_dim is not
  // divisible by heads, or t_embed_dim is odd.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  static ModelConfig from_key_values(const std::map<std::string, std::string>& kv);
};

// Number of scalar parameters implied by `config`.
size_t parameter_count(const ModelConfig& config);

// [sin(v w_0..w_{d/2-1}), cos(v w_0..w_{d/2-1})], w_i = 10000^(-2i/dim).
std::vector<double> sinusoidal_embed(double value, int dim);

// Plain-matrix wrapper over ad::self_similarity. Throws ConfigError when
// window < 1.
ad::Tensor self_similarity(const ad::Tensor& features, int window);

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

// Temporal self-similarity encoder f and denoising decoder h.
//
// Encoder: conv1d(k=3) -> windowed cosine self-similarity -> pointwise
// Linear/GELU/Linear to C channels.
//
// Decoder: y_t -> Linear/GELU/Linear to decoder_dim, concat with the
// condition, re-project, add frame position embeddings, then per layer
//   a = x + MHA(LN1(x))
//   x = a + FFN(scale_shift(LN2(a), film(t)))
// and a final LN + Linear/GELU/Linear head emitting one value per frame.
class DenoiserModel : public Denoiser {
 public:
  // Fan-in uniform init for weights, zero biases, zero head output layer.
  DenoiserModel(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }

  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  // Throws ModelError for unknown names.
  ad::Tensor& parameter(const std::string& name);
  const ad::Tensor& parameter(const std::string& name) const;

  void set_requires_grad(bool value);
  void zero_grad();

  // F (L x D) -> E (L x condition_dim). Records on the active tape.
  ConditionEmbedding encode(const ad::Tensor& features) const;

  // y_t (L x 1) -> y0 estimate (L x 1). A null condition uses the zero
  // matrix. Records on the active tape.
  ad::Tensor denoise(const ad::Tensor& y_t, int t, const ConditionEmbedding* condition) const;

  BoundarySignal predict(const BoundarySignal& y_t, int t,
                         const ConditionEmbedding* condition) const override;

  // Test hook: replaces the frame position embeddings with zeros.
  void disable_position_embedding();

 private:
  void add_param(const std::string& name, size_t rows, size_t cols, double bound,
                 uint64_t seed, uint64_t index);
  const ad::Tensor& p(const std::string& name) const { return parameter(name); }

  ModelConfig config_;
  std::vector<NamedParameter> params_;
  std::map<std::string, size_t> index_;
  ad::Tensor position_;  // L x decoder_dim, constant
};

}  // namespace boundiff

#endif  // BOUNDIFF_NN_H_
