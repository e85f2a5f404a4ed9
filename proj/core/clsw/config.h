// clsw/config.h

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

// Resolved run configuration: every module's tunables in one JSON document,
// with "paper" (full-scale) and "desk" (toy) presets. Unknown keys are
// rejected exhaustively; every run writes its resolved config next to its
// outputs.

#ifndef CLSW_CONFIG_H_
#define CLSW_CONFIG_H_

#include <string>

#include "clsw/finetune.h"
#include "clsw/model.h"
#include "clsw/ssl.h"

namespace clsw {

struct PretrainRunConfig {
  int64_t steps = 1000;
  int batch_size = 4;
  float peak_lr = 1e-3f;
  int64_t warmup_steps = 100;
  int64_t log_every = 10;
  int64_t checkpoint_every = 500;
  PretrainConfig objective;
};

struct FinetuneRunConfig {
  int64_t steps = 600;
  int batch_size = 4;
  float peak_lr = 1e-3f;
  int64_t warmup_steps = 50;
  int64_t log_every = 10;
  FinetuneConfig objective;
};

struct DecodeRunConfig {
  int beam = 128;
  float lm_weight = 1.2f;
  float word_score = 0.5f;
  int nbest = 5;
};

struct PipelineRunConfig {
  double snr_min_db = 25.0;
  double min_dur_sec = 1.0;
  double max_dur_sec = 30.0;
  int vad_mode = 2;
  double train_ratio = 0.9;
};

struct LmRunConfig {
  int order = 5;
  double discount = 0.75;
};

struct RunConfig {
  ModelConfig model;
  PretrainRunConfig pretrain;
  FinetuneRunConfig finetune;
  DecodeRunConfig decode;
  PipelineRunConfig pipeline;
  LmRunConfig lm;

  // Toy profile: CPU-trainable in minutes.
  static RunConfig Desk();
  // Full-scale defaults: 300k steps, lr 5e-4 with 32k warmup, crop 250k
  // frames, G=2 V=320, 5-gram LM, beam 128.
  static RunConfig FullScale();
  static RunConfig FromPreset(const std::string& name);  // "desk" | "full"

  void Validate() const;
};

std::string RunConfigToJson(const RunConfig& cfg);

// Parses and validates; reports every unknown key and every invalid value at
// once (ConfigError). `base` supplies defaults for absent keys.
RunConfig RunConfigFromJson(const std::string& json_text, const RunConfig& base);

RunConfig LoadRunConfigFile(const std::string& path, const RunConfig& base);
void WriteResolvedConfig(const RunConfig& cfg, const std::string& path);

}  // namespace clsw

#endif  // CLSW_CONFIG_H_
