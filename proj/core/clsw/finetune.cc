// clsw/finetune.cc

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

#include "clsw/finetune.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace clsw {

namespace {

// Splits UTF-8 text into codepoint strings.
std::vector<std::string> Utf8Chars(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

Vocabulary Vocabulary::FromSymbols(std::vector<std::string> symbols, std::string delimiter) {
  Vocabulary v;
  v.delimiter_ = std::move(delimiter);
  std::map<std::string, int> seen;
  for (const std::string& s : symbols) {
    CLSW_CHECK_DATA(!s.empty(), "vocabulary: empty symbol");
    CLSW_CHECK_DATA(!seen.count(s), "vocabulary: duplicate symbol '", s, "'");
    seen[s] = 1;
  }
  if (!seen.count(v.delimiter_)) symbols.push_back(v.delimiter_);
  v.symbols_ = std::move(symbols);
  return v;
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream is(path);
  CLSW_CHECK_DATA(is.good(), "vocabulary: cannot open '", path, "'");
  std::string line;
  CLSW_CHECK_DATA(static_cast<bool>(std::getline(is, line)),
                  "vocabulary: missing header line in '", path, "'");
  std::vector<std::string> symbols;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    symbols.push_back(line);
  }
  return FromSymbols(std::move(symbols));
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "vocabulary: cannot write '", path, "'");
  os << "# clsw vocabulary: one symbol per line, blank is implicit id 0\n";
  for (const std::string& s : symbols_) os << s << "\n";
}

const std::string& Vocabulary::Symbol(int id) const {
  CLSW_CHECK(id >= 1 && id < Size(), "vocabulary: symbol id ", id, " out of range");
  return symbols_[id - 1];
}

std::optional<int> Vocabulary::IdOf(const std::string& symbol) const {
  for (size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i] == symbol) return static_cast<int>(i) + 1;
  return std::nullopt;
}

int Vocabulary::DelimiterId() const {
  auto id = IdOf(delimiter_);
  CLSW_CHECK(id.has_value(), "vocabulary: delimiter missing");
  return *id;
}

std::vector<int> Vocabulary::Encode(const std::string& text) const {
  std::vector<int> out;
  for (const std::string& ch : Utf8Chars(text)) {
    const std::string sym = (ch == " ") ? delimiter_ : ch;
    auto id = IdOf(sym);
    CLSW_CHECK_DATA(id.has_value(), "vocabulary: character '", ch,
                    "' not in the vocabulary");
    out.push_back(*id);
  }
  return out;
}

std::string Vocabulary::Decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kBlankId) continue;
    const std::string& sym = Symbol(id);
    out += (sym == delimiter_) ? " " : sym;
  }
  // Trim outer spaces and collapse runs introduced by repeated delimiters.
  std::string cleaned;
  bool prev_space = true;
  for (char c : out) {
    if (c == ' ') {
      if (prev_space) continue;
      prev_space = true;
    } else {
      prev_space = false;
    }
    cleaned.push_back(c);
  }
  while (!cleaned.empty() && cleaned.back() == ' ') cleaned.pop_back();
  return cleaned;
}

Tensor FeatureMaskAugment(const Tensor& z, const AugmentConfig& cfg, Rng* rng) {
  CLSW_CHECK(cfg.time_mask_prob >= 0.0f && cfg.time_mask_prob <= 1.0f &&
                 cfg.channel_mask_prob >= 0.0f && cfg.channel_mask_prob <= 1.0f,
             "feature_mask_augment: probabilities must be in [0,1]");
  if (cfg.time_mask_prob == 0.0f && cfg.channel_mask_prob == 0.0f) return z;
  const int64_t t = z.Dim(0), d = z.Dim(1);
  std::vector<char> time_mask(t, 0), chan_mask(d, 0);
  for (int64_t i = 0; i < t; ++i)
    if (rng->Uniform() < cfg.time_mask_prob)
      for (int64_t j = i; j < std::min<int64_t>(i + cfg.time_mask_span, t); ++j)
        time_mask[j] = 1;
  for (int64_t c = 0; c < d; ++c)
    if (rng->Uniform() < cfg.channel_mask_prob)
      for (int64_t j = c; j < std::min<int64_t>(c + cfg.channel_mask_span, d); ++j)
        chan_mask[j] = 1;
  std::vector<float> keep(t * d, 1.0f);
  for (int64_t i = 0; i < t; ++i)
    for (int64_t c = 0; c < d; ++c)
      if (time_mask[i] || chan_mask[c]) keep[i * d + c] = 0.0f;
  return Mul(z, Tensor({t, d}, std::move(keep)));
}

void EnsureCtcHead(Model* model, const Vocabulary& vocab, uint64_t seed, float init_scale) {
  const int64_t out_dim = vocab.Size();
  const int64_t d = model->cfg().model_dim;
  if (model->params().Has("ctc_head.weight")) {
    const Param& w = model->params().Get("ctc_head.weight");
    CLSW_CHECK_DATA(w.value.Dim(1) == out_dim,
                    "ctc head size ", w.value.Dim(1), " does not match vocabulary size ",
                    out_dim);
    return;
  }
  Rng rng(seed ^ 0x5ca1ab1eull);
  std::vector<float> w(d * out_dim);
  for (float& x : w) x = static_cast<float>((rng.Uniform() * 2.0 - 1.0) * init_scale);
  model->params().Create("ctc_head.weight", Tensor({d, out_dim}, std::move(w)));
  model->params().Create("ctc_head.bias", Tensor::Zeros({out_dim}));
}

Tensor CtcLogProbs(const Model& model, ParamBinder& pb, std::span<const float> waveform,
                   bool train, const FinetuneConfig& cfg, Rng* rng) {
  Tensor z = model.EncodeFeatures(pb, waveform, train, rng);
  if (train) z = FeatureMaskAugment(z, cfg.augment, rng);
  Tensor c = model.Contextualize(pb, z, train, rng);
  Tensor logits = Add(Matmul(c, pb("ctc_head.weight")), pb("ctc_head.bias"));
  return LogSoftmax(logits, 1);
}

FinetuneStepStats FinetuneStep(Model* model, AdamState* opt,
                               const std::vector<const LabeledUtterance*>& batch,
                               const FinetuneConfig& cfg, int64_t step, uint64_t seed) {
  CLSW_CHECK(!batch.empty(), "finetune_step: empty batch");
  CLSW_CHECK(model->params().Has("ctc_head.weight"),
             "finetune_step: CTC head not initialized");
  Rng rng = Rng(seed ^ 0xf1e7u).Fork(static_cast<uint64_t>(step));

  // Feature encoder always frozen; optionally everything but the head.
  std::set<std::string> frozen = model->FeatureEncoderPrefixes();
  frozen.insert("quantizer");
  if (step < cfg.freeze_transformer_steps) {
    frozen.insert("block");
    frozen.insert("pos_conv");
    frozen.insert("final_norm");
    frozen.insert("mask_emb");
  }

  Graph graph;
  ParamBinder pb(&graph, &model->params(), &frozen);
  model->params().ZeroGrads();

  std::vector<Tensor> losses;
  FinetuneStepStats stats;
  for (const LabeledUtterance* utt : batch) {
    CLSW_CHECK_DATA(!utt->target.empty(), "finetune_step: empty transcript for '",
                    utt->id, "'");
    Tensor lp = CtcLogProbs(*model, pb, utt->samples, /*train=*/true, cfg, &rng);
    Tensor loss = CtcLoss(lp, utt->target);
    if (std::isinf(loss.Item())) {
      ++stats.skipped;
      continue;
    }
    losses.push_back(loss);
  }
  if (losses.empty()) {
    Warn(StrCat("finetune_step: every utterance in the batch was infeasible at step ",
                step));
    stats.lr = LrAt(opt->step, *opt);
    return stats;
  }
  Tensor total = losses[0];
  for (size_t i = 1; i < losses.size(); ++i) total = Add(total, losses[i]);
  total = Scale(total, 1.0f / static_cast<float>(losses.size()));
  stats.loss = total.Item();
  if (!std::isfinite(stats.loss))
    throw NumericError(StrCat("finetune_step: non-finite loss at step ", step));

  graph.Backward(total);

  std::vector<Param*> trainable;
  for (Param* p : model->params().All()) {
    bool is_frozen = false;
    for (const std::string& prefix : frozen)
      if (p->name.rfind(prefix, 0) == 0) is_frozen = true;
    if (!is_frozen) trainable.push_back(p);
  }
  AdamStep(trainable, opt);
  stats.lr = LrAt(opt->step, *opt);
  return stats;
}

}  // namespace clsw
