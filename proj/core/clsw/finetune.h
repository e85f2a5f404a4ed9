// clsw/finetune.h

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

// Character-level CTC finetuning: linear head on the context network, frozen
// feature encoder, and SpecAugment-style feature masking.

#ifndef CLSW_FINETUNE_H_
#define CLSW_FINETUNE_H_

#include <optional>
#include <string>
#include <vector>

#include "clsw/ctc.h"
#include "clsw/model.h"
#include "clsw/optim.h"

namespace clsw {

// Character inventory with the CTC blank reserved at index 0 and a word
// delimiter symbol ("|") that maps to space at scoring time.
class Vocabulary {
 public:
  Vocabulary() = default;
  // `symbols` excludes the blank; must contain the delimiter and no duplicates.
  static Vocabulary FromSymbols(std::vector<std::string> symbols,
                                std::string delimiter = "|");
  static Vocabulary Load(const std::string& path);
  void Save(const std::string& path) const;

  int64_t Size() const { return static_cast<int64_t>(symbols_.size()) + 1; }
  static constexpr int kBlankId = 0;
  const std::string& Symbol(int id) const;  // id in [1, Size())
  std::optional<int> IdOf(const std::string& symbol) const;
  const std::string& delimiter() const { return delimiter_; }
  int DelimiterId() const;

  // UTF-8 text <-> symbol ids; spaces map to the delimiter. Unknown
  // characters raise DataError.
  std::vector<int> Encode(const std::string& text) const;
  std::string Decode(const std::vector<int>& ids) const;

  std::vector<std::string> Symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;  // index i -> id i+1
  std::string delimiter_ = "|";
};

struct AugmentConfig {
  float time_mask_prob = 0.05f;
  int time_mask_span = 10;
  float channel_mask_prob = 0.1f;
  int channel_mask_span = 8;
};

// Zeroes sampled time spans and channel bands; applied only in training mode.
Tensor FeatureMaskAugment(const Tensor& z, const AugmentConfig& cfg, Rng* rng);

struct FinetuneConfig {
  AugmentConfig augment;
  // Tri-state freeze schedule: update only the head for the first N steps,
  // then unfreeze the transformer. The feature encoder is always frozen.
  int freeze_transformer_steps = 0;
  float head_init_scale = 0.02f;
};

struct LabeledUtterance {
  std::string id;
  std::vector<float> samples;
  std::vector<int> target;  // vocabulary ids, no blanks
};

// Adds (or validates) the linear CTC head parameters on the model.
void EnsureCtcHead(Model* model, const Vocabulary& vocab, uint64_t seed,
                   float init_scale = 0.02f);

// Frozen-encoder forward to per-frame log probabilities [T, |V|+1].
Tensor CtcLogProbs(const Model& model, ParamBinder& pb, std::span<const float> waveform,
                   bool train, const FinetuneConfig& cfg, Rng* rng);

struct FinetuneStepStats {
  float loss = 0.0f;  // mean CTC loss over scored utterances
  int skipped = 0;    // infeasible utterances (loss +inf)
  float lr = 0.0f;
};

FinetuneStepStats FinetuneStep(Model* model, AdamState* opt,
                               const std::vector<const LabeledUtterance*>& batch,
                               const FinetuneConfig& cfg, int64_t step, uint64_t seed);

}  // namespace clsw

#endif  // CLSW_FINETUNE_H_
