// clsw/ssl.cc

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

#include "clsw/ssl.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace clsw {

CandidateSets SampleDistractors(const std::vector<int64_t>& masked_positions, int k,
                                Rng* rng) {
  const int64_t m = static_cast<int64_t>(masked_positions.size());
  CLSW_CHECK(m >= 2, "sample_distractors: need at least 2 masked frames, got ", m);
  CandidateSets out;
  out.k_used = k;
  if (k > m - 1) {
    out.k_used = static_cast<int>(m - 1);
    Warn(StrCat("sample_distractors: only ", m - 1, " other masked frames; K reduced from ",
                k, " to ", out.k_used));
  }
  out.frames.resize(m);
  for (int64_t i = 0; i < m; ++i) {
    auto& set = out.frames[i];
    set.reserve(out.k_used + 1);
    set.push_back(masked_positions[i]);  // true candidate first
    for (int j = 0; j < out.k_used; ++j) {
      int64_t pick = rng->UniformInt(m - 1);
      if (pick >= i) ++pick;  // uniform over the other masked frames
      set.push_back(masked_positions[pick]);
    }
  }
  return out;
}

Tensor ContrastiveLossSum(const Tensor& context, const Tensor& quantized,
                          const CandidateSets& cands, float kappa) {
  CLSW_CHECK(kappa > 0.0f, "contrastive_loss: kappa must be positive, got ", kappa);
  CheckShape(context.Rank() == 2 && quantized.Rank() == 2 &&
                 context.Dims() == quantized.Dims(),
             "contrastive_loss", {context.Dims(), quantized.Dims()},
             "C and Q must be equal [t,d]");
  const int64_t m = static_cast<int64_t>(cands.frames.size());
  CLSW_CHECK(m >= 1, "contrastive_loss: empty candidate sets");
  const int64_t set_size = static_cast<int64_t>(cands.frames[0].size());

  // Flatten every candidate set into one [m*(K+1), d] gather so the whole
  // utterance's similarities form a single op chain.
  std::vector<int64_t> cand_ids, ctx_ids;
  cand_ids.reserve(m * set_size);
  ctx_ids.reserve(m * set_size);
  for (int64_t i = 0; i < m; ++i) {
    CLSW_CHECK(static_cast<int64_t>(cands.frames[i].size()) == set_size,
               "contrastive_loss: ragged candidate sets");
    for (int64_t j = 0; j < set_size; ++j) {
      cand_ids.push_back(cands.frames[i][j]);
      ctx_ids.push_back(cands.frames[i][0]);  // c_t of the masked frame
    }
  }
  Tensor cand_rows = EmbeddingLookup(quantized, cand_ids);
  Tensor ctx_rows = EmbeddingLookup(context, ctx_ids);
  Tensor sims = CosineSimilarity(cand_rows, ctx_rows);  // [m*(K+1)]
  Tensor scores = Reshape(Scale(sims, 1.0f / kappa), {m, set_size});
  Tensor lsm = LogSoftmax(scores, 1);
  Tensor true_col = Slice(lsm, 1, 0, 1);  // log p(true | candidates)
  return Scale(Sum(true_col), -1.0f);
}

Tensor DiversityLoss(const Tensor& pbar, DiversityForm form) {
  CheckShape(pbar.Rank() == 2, "diversity_loss", {pbar.Dims()}, "expected [G, V]");
  const int64_t g = pbar.Dim(0), v = pbar.Dim(1);
  for (int64_t gi = 0; gi < g; ++gi) {
    double sum = 0.0;
    for (int64_t vi = 0; vi < v; ++vi) sum += pbar.At({gi, vi});
    CLSW_CHECK(std::abs(sum - 1.0) < 1e-4,
               "diversity_loss: group ", gi, " probabilities sum to ", sum);
  }
  if (form == DiversityForm::kPaper) {
    // (1/GV) sum_g sum_v p log p with 0 log 0 := 0 (Log floors its input, so
    // a zero entry contributes exactly 0).
    return Scale(Sum(Mul(pbar, Log(pbar))), 1.0f / static_cast<float>(g * v));
  }
  // Perplexity form: (GV - sum_g exp H_g) / GV.
  Tensor ent = Scale(Sum(Mul(pbar, Log(pbar)), 1), -1.0f);  // [G] entropies
  Tensor ppl_sum = Sum(Exp(ent));
  return Scale(AddScalar(Scale(ppl_sum, -1.0f), static_cast<float>(g * v)),
               1.0f / static_cast<float>(g * v));
}

Tensor TotalLoss(const Tensor& l_m, const Tensor& l_d, float alpha) {
  return Add(l_m, Scale(l_d, alpha));
}

float CodePerplexity(const Tensor& pbar) {
  const int64_t g = pbar.Dim(0), v = pbar.Dim(1);
  double total = 0.0;
  for (int64_t gi = 0; gi < g; ++gi) {
    double h = 0.0;
    for (int64_t vi = 0; vi < v; ++vi) {
      const double p = pbar.At({gi, vi});
      if (p > 0.0) h -= p * std::log(p);
    }
    total += std::exp(h);
  }
  return static_cast<float>(total / static_cast<double>(g));
}

namespace {

// Masking for training: guarantee at least two masked frames so the
// contrastive task is defined even on unlucky draws.
MaskSpec MaskForTraining(int64_t t_latent, const ModelConfig& cfg, Rng* rng) {
  MaskSpec spec = MaskTimesteps(t_latent, cfg.mask_prob, cfg.mask_span, rng);
  if (static_cast<int64_t>(spec.masked.size()) >= 2 || t_latent < 2) return spec;
  std::vector<char> m(t_latent, 0);
  for (int64_t i : spec.masked) m[i] = 1;
  while (std::count(m.begin(), m.end(), char{1}) < 2) {
    const int64_t start = rng->UniformInt(t_latent);
    const int64_t end = std::min<int64_t>(start + cfg.mask_span, t_latent);
    for (int64_t i = start; i < end; ++i) m[i] = 1;
  }
  spec.masked.clear();
  for (int64_t i = 0; i < t_latent; ++i)
    if (m[i]) spec.masked.push_back(i);
  return spec;
}

std::span<const float> CropWaveform(const UtteranceAudio& utt, int64_t crop_limit,
                                    Rng* rng) {
  std::span<const float> wave(utt.samples);
  if (crop_limit > 0 && static_cast<int64_t>(wave.size()) > crop_limit) {
    const int64_t start =
        rng->UniformInt(static_cast<int64_t>(wave.size()) - crop_limit + 1);
    wave = wave.subspan(start, crop_limit);
  }
  return wave;
}

struct UtteranceForward {
  Tensor loss_sum;      // contrastive loss summed over masked frames
  Tensor masked_probs;  // [M, G*V] soft probabilities at masked frames
  int64_t num_masked = 0;
};

UtteranceForward ForwardOne(const Model& model, ParamBinder& pb,
                            std::span<const float> wave, const PretrainConfig& pcfg,
                            float tau, bool train, Rng* rng) {
  const ModelConfig& mcfg = model.cfg();
  Tensor z = model.EncodeFeatures(pb, wave, train, rng);
  MaskSpec mask = MaskForTraining(z.Dim(0), mcfg, rng);
  CLSW_CHECK_DATA(mask.masked.size() >= 2,
                  "pretrain: utterance too short to mask (latent length ", z.Dim(0), ")");

  // Targets: quantize the unmasked Z, then gather its masked rows.
  QuantizeResult quant = model.Quantize(pb, z, tau, rng, /*hard=*/true);
  Tensor z_masked = model.ApplyTimeMask(pb, z, mask);
  Tensor c = model.Contextualize(pb, z_masked, train, rng);

  CandidateSets cands = SampleDistractors(mask.masked, pcfg.distractors, rng);
  UtteranceForward out;
  out.loss_sum = ContrastiveLossSum(c, quant.q, cands, pcfg.kappa);
  const int64_t gv = static_cast<int64_t>(mcfg.num_codebooks) * mcfg.entries_per_book;
  out.masked_probs = EmbeddingLookup(Reshape(quant.probs, {z.Dim(0), gv}), mask.masked);
  out.num_masked = static_cast<int64_t>(mask.masked.size());
  return out;
}

}  // namespace

PretrainStepStats PretrainStep(Model* model, AdamState* opt,
                               const std::vector<const UtteranceAudio*>& batch,
                               const PretrainConfig& pcfg, int64_t step, uint64_t seed) {
  CLSW_CHECK(!batch.empty(), "pretrain_step: empty batch");
  const ModelConfig& mcfg = model->cfg();
  const float tau = GumbelTemperature(mcfg, step);
  Rng rng = Rng(seed).Fork(static_cast<uint64_t>(step));

  Graph graph;
  ParamBinder pb(&graph, &model->params());
  model->params().ZeroGrads();

  std::vector<Tensor> loss_sums, prob_blocks;
  int64_t total_masked = 0;
  for (const UtteranceAudio* utt : batch) {
    std::span<const float> wave = CropWaveform(*utt, pcfg.crop_limit, &rng);
    UtteranceForward fwd = ForwardOne(*model, pb, wave, pcfg, tau, /*train=*/true, &rng);
    loss_sums.push_back(fwd.loss_sum);
    prob_blocks.push_back(fwd.masked_probs);
    total_masked += fwd.num_masked;
  }

  Tensor lm_sum = loss_sums[0];
  for (size_t i = 1; i < loss_sums.size(); ++i) lm_sum = Add(lm_sum, loss_sums[i]);
  Tensor l_m = Scale(lm_sum, 1.0f / static_cast<float>(total_masked));

  Tensor all_probs = prob_blocks.size() == 1 ? prob_blocks[0] : Concat(prob_blocks, 0);
  Tensor pbar = Reshape(Mean(all_probs, 0), {mcfg.num_codebooks, mcfg.entries_per_book});
  Tensor l_d = DiversityLoss(pbar, pcfg.diversity_form);
  Tensor total = TotalLoss(l_m, l_d, pcfg.alpha);

  PretrainStepStats stats;
  stats.loss.l_m = l_m.Item();
  stats.loss.l_d = l_d.Item();
  stats.loss.l = total.Item();
  stats.loss.kappa = pcfg.kappa;
  stats.loss.alpha = pcfg.alpha;
  stats.loss.num_masked_frames = total_masked;
  stats.tau = tau;
  stats.code_perplexity = CodePerplexity(pbar);
  if (!std::isfinite(stats.loss.l)) {
    throw NumericError(StrCat("pretrain_step: non-finite loss at step ", step,
                              " (l_m=", stats.loss.l_m, ", l_d=", stats.loss.l_d,
                              ", tau=", tau, ")"));
  }

  graph.Backward(total);
  AdamStep(model->params().All(), opt);
  stats.lr = LrAt(opt->step, *opt);
  return stats;
}

std::vector<LanguageLossRow> PerLanguageValidLoss(
    const Model& model, const std::vector<UtteranceAudio>& utterances,
    const PretrainConfig& pcfg, int64_t step_for_tau, uint64_t seed) {
  const ModelConfig& mcfg = model.cfg();
  const float tau = GumbelTemperature(mcfg, step_for_tau);

  struct Accum {
    double lm_sum = 0.0;       // summed over masked frames
    double ld_weighted = 0.0;  // frame-weighted per-utterance L_d
    int64_t frames = 0;
    int64_t utts = 0;
  };
  std::map<std::string, Accum> by_lang;

  for (const UtteranceAudio& utt : utterances) {
    // Masking/noise RNG fixed per utterance id: same id, same loss.
    Rng rng(seed ^ HashString(utt.id));
    ParamBinder pb(nullptr, const_cast<ParamStore*>(&model.params()));
    UtteranceForward fwd =
        ForwardOne(model, pb, utt.samples, pcfg, tau, /*train=*/false, &rng);
    Tensor pbar = Reshape(Mean(fwd.masked_probs, 0),
                          {mcfg.num_codebooks, mcfg.entries_per_book});
    const double ld = DiversityLoss(pbar, pcfg.diversity_form).Item();
    Accum& acc = by_lang[utt.language];
    acc.lm_sum += fwd.loss_sum.Item();
    acc.ld_weighted += ld * static_cast<double>(fwd.num_masked);
    acc.frames += fwd.num_masked;
    acc.utts += 1;
  }

  std::vector<LanguageLossRow> rows;
  Accum pooled;
  for (const auto& [lang, acc] : by_lang) {
    if (acc.frames == 0) {
      Warn("per_language_valid_loss: language '" + lang + "' has no usable utterances");
      continue;
    }
    LanguageLossRow row;
    row.language = lang;
    row.l_m = acc.lm_sum / acc.frames;
    row.l_d = acc.ld_weighted / acc.frames;
    row.l = row.l_m + pcfg.alpha * row.l_d;
    row.masked_frames = acc.frames;
    row.utterances = acc.utts;
    rows.push_back(row);
    pooled.lm_sum += acc.lm_sum;
    pooled.ld_weighted += acc.ld_weighted;
    pooled.frames += acc.frames;
    pooled.utts += acc.utts;
  }
  if (pooled.frames > 0) {
    LanguageLossRow overall;
    overall.language = "overall";
    overall.l_m = pooled.lm_sum / pooled.frames;
    overall.l_d = pooled.ld_weighted / pooled.frames;
    overall.l = overall.l_m + pcfg.alpha * overall.l_d;
    overall.masked_frames = pooled.frames;
    overall.utterances = pooled.utts;
    rows.push_back(overall);
  }
  return rows;
}

std::string LanguageLossCsv(const std::vector<LanguageLossRow>& rows) {
  std::ostringstream os;
  os << "language,l_m,l_d,l,masked_frames,utterances\n";
  for (const auto& r : rows) {
    os << r.language << ',' << r.l_m << ',' << r.l_d << ',' << r.l << ','
       << r.masked_frames << ',' << r.utterances << '\n';
  }
  return os.str();
}

}  // namespace clsw
