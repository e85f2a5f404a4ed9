// clsw/model.h

// Copyright 2026  CLSW authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// The network: convolutional feature encoder (waveform -> Z), time-step
// masking, transformer context network (-> C), and the G-codebook
// Gumbel-softmax product quantizer (Z -> Q).

#ifndef CLSW_MODEL_H_
#define CLSW_MODEL_H_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clsw/optim.h"
#include "clsw/tensor.h"

namespace clsw {

struct ConvLayerSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
};

struct ModelConfig {
  std::vector<ConvLayerSpec> conv_spec;
  int model_dim = 64;
  int num_blocks = 2;
  int num_heads = 2;
  int ffn_dim = 256;
  float dropout = 0.1f;
  int num_codebooks = 2;      // G
  int entries_per_book = 32;  // V
  float gumbel_start = 2.0f;
  float gumbel_floor = 0.5f;
  float gumbel_decay = 0.995f;  // multiplicative, per step
  float mask_prob = 0.065f;
  int mask_span = 10;
  int pos_conv_kernel = 9;  // 0 disables the convolutional positional embedding
  bool conv_group_norm = true;
  bool learned_mask_embedding = true;

  // CPU-trainable toy profile (~x20 downsampling feature encoder).
  static ModelConfig Desk();
  // Full-scale defaults: 12 blocks, dim 768, 8 heads, G=2, V=320.
  static ModelConfig FullScale();

  void Validate() const;  // throws ConfigError

  int EntryDim() const { return model_dim / num_codebooks; }
  int64_t LatentLength(int64_t num_samples) const;  // composed stride arithmetic
  int64_t MinInputSamples() const;
};

std::string ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const std::string& json_text);

// Gumbel temperature schedule: start * decay^step, floored.
float GumbelTemperature(const ModelConfig& cfg, int64_t step);

// Set of masked time steps. Start indices are Bernoulli(mask_prob) per frame,
// each expanded to mask_span frames (clipped at the end; spans may overlap).
// A sequence shorter than the span yields no masks.
struct MaskSpec {
  int64_t t_latent = 0;
  std::vector<int64_t> masked;  // sorted unique indices
  bool IsMasked(int64_t t) const;
};

MaskSpec MaskTimesteps(int64_t t_latent, float mask_prob, int mask_span, Rng* rng);

// Binds parameters to a tape as leaves, once per name. With a null graph (or
// a frozen name) parameters enter forward passes as constants.
class ParamBinder {
 public:
  ParamBinder(Graph* graph, ParamStore* store,
              const std::set<std::string>* frozen_prefixes = nullptr);
  Tensor operator()(const std::string& name);
  Graph* graph() const { return graph_; }

 private:
  bool IsFrozen(const std::string& name) const;
  Graph* graph_;
  ParamStore* store_;
  const std::set<std::string>* frozen_prefixes_;
  std::map<std::string, Tensor> bound_;
};

struct QuantizeResult {
  Tensor q;      // [T, d]
  Tensor probs;  // [T, G, V], the Gumbel-softmax probabilities
  std::vector<int> codes;  // argmax entry per (t, g), row-major [T x G]
};

class Model {
 public:
  Model(ModelConfig cfg, uint64_t seed);

  const ModelConfig& cfg() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Waveform -> latent Z [T_latent, d]. Throws DataError when the input is
  // shorter than the conv stack's receptive field.
  Tensor EncodeFeatures(ParamBinder& pb, std::span<const float> waveform, bool train,
                        Rng* rng) const;

  // Replaces masked rows of Z with the (learned) mask embedding.
  Tensor ApplyTimeMask(ParamBinder& pb, const Tensor& z, const MaskSpec& mask) const;

  // Z_masked -> context C. num_blocks == 0 is the identity stack.
  Tensor Contextualize(ParamBinder& pb, const Tensor& z, bool train, Rng* rng) const;

  // Gumbel-softmax product quantization of Z. `hard` selects one-hot forward
  // with straight-through gradients; `with_noise` disables Gumbel noise for
  // deterministic inference-mode extraction.
  QuantizeResult Quantize(ParamBinder& pb, const Tensor& z, float tau, Rng* rng, bool hard,
                          bool with_noise = true) const;

  // Names of every parameter the feature encoder uses (the finetune freeze set).
  std::set<std::string> FeatureEncoderPrefixes() const;

 private:
  void InitParams(uint64_t seed);
  ModelConfig cfg_;
  ParamStore params_;
};

// ---- Checkpoint file -------------------------------------------------------
// magic "CLSW", u32 version, canonical JSON config block, then per-tensor
// records (name, rank, u64 dims, little-endian f32 payload).

struct CheckpointData {
  uint32_t version = 1;
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> tensors;
  int64_t training_step = 0;
  bool has_optimizer = false;
  int64_t adam_step = 0;
  std::vector<std::pair<std::string, Tensor>> opt_tensors;
};

void SaveCheckpoint(const std::string& path, const CheckpointData& data);
CheckpointData LoadCheckpoint(const std::string& path);  // throws DataError

// Model-level helpers. Loading validates every tensor name and shape against
// the model's parameters and reports all offenders at once.
void SaveModelCheckpoint(const std::string& path, const Model& model,
                         const std::string& config_json, int64_t training_step,
                         const AdamState* opt);
void LoadWeightsInto(Model* model, const CheckpointData& data, AdamState* opt = nullptr);

}  // namespace clsw

#endif  // CLSW_MODEL_H_
