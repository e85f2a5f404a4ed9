// clsw/ssl.h

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

// Pretraining objective: masked-contrastive loss over quantized targets with
// within-utterance distractors, plus the codebook diversity regularizer, and
// the training/validation loops built on them.

#ifndef CLSW_SSL_H_
#define CLSW_SSL_H_

#include <string>
#include <vector>

#include "clsw/model.h"
#include "clsw/optim.h"
#include "clsw/tensor.h"

namespace clsw {

enum class DiversityForm {
  kPaper,      // (1/GV) sum p log p, the printed formula (negative scaled entropy)
  kReference,  // (GV - sum_g exp H_g) / GV, the perplexity-based variant
};

struct PretrainConfig {
  int64_t crop_limit = 250000;  // samples per utterance after cropping
  int distractors = 10;         // K; 100 at full scale
  float kappa = 0.1f;           // contrastive temperature
  float alpha = 0.1f;           // diversity weight
  DiversityForm diversity_form = DiversityForm::kPaper;
  int batch_size = 4;
};

struct LossBreakdown {
  float l_m = 0.0f;
  float l_d = 0.0f;
  float l = 0.0f;
  float kappa = 0.0f;
  float alpha = 0.0f;
  int64_t num_masked_frames = 0;
};

// Candidate frame-index sets: per masked frame, entry 0 is the true frame,
// followed by K distractors drawn uniformly from the other masked frames of
// the same utterance. K is reduced (with a warning) when fewer are available.
struct CandidateSets {
  std::vector<std::vector<int64_t>> frames;
  int k_used = 0;
};

CandidateSets SampleDistractors(const std::vector<int64_t>& masked_positions, int k,
                                Rng* rng);

// Sum over masked frames of -log softmax(sim(q~, c_t)/kappa) at the true
// candidate; divide by the frame count for the per-frame mean.
Tensor ContrastiveLossSum(const Tensor& context, const Tensor& quantized,
                          const CandidateSets& cands, float kappa);

// Batch-averaged Gumbel-softmax probabilities [G, V] -> scalar diversity loss.
// Rows must sum to 1 within 1e-4.
Tensor DiversityLoss(const Tensor& pbar, DiversityForm form);

Tensor TotalLoss(const Tensor& l_m, const Tensor& l_d, float alpha);

// Mean per-group exp(entropy) of the averaged code distribution; V when usage
// is uniform, 1 when collapsed.
float CodePerplexity(const Tensor& pbar);

struct UtteranceAudio {
  std::string id;
  std::string language;
  std::vector<float> samples;  // 16 kHz mono
};

struct PretrainStepStats {
  LossBreakdown loss;
  float lr = 0.0f;
  float tau = 0.0f;
  float code_perplexity = 0.0f;
};

// One full pretraining update: crop -> encode -> mask -> quantize targets ->
// contextualize -> Eq.2 loss -> backward -> Adam. Deterministic given
// (seed, step). Throws NumericError with the component losses on NaN.
PretrainStepStats PretrainStep(Model* model, AdamState* opt,
                               const std::vector<const UtteranceAudio*>& batch,
                               const PretrainConfig& pcfg, int64_t step, uint64_t seed);

struct LanguageLossRow {
  std::string language;
  double l_m = 0.0;
  double l_d = 0.0;
  double l = 0.0;
  int64_t masked_frames = 0;
  int64_t utterances = 0;
};

// Per-language validation losses with masking/noise RNG fixed per utterance
// id. Appends an "overall" row holding the frame-weighted pooled means.
std::vector<LanguageLossRow> PerLanguageValidLoss(
    const Model& model, const std::vector<UtteranceAudio>& utterances,
    const PretrainConfig& pcfg, int64_t step_for_tau, uint64_t seed);

std::string LanguageLossCsv(const std::vector<LanguageLossRow>& rows);

}  // namespace clsw

#endif  // CLSW_SSL_H_
