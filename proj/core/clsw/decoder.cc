// clsw/decoder.cc

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

#include "clsw/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace clsw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PrefixState {
  double p_blank = kNegInf;     // log prob of paths ending in blank
  double p_nonblank = kNegInf;  // log prob of paths ending in the last symbol
  double lm_acc = 0.0;          // lambda-weighted LM + word bonus, completed words
  std::vector<std::string> lm_context;  // last (order-1) completed words
  std::string partial_word;             // symbols since the last delimiter
};

double TotalLog(const PrefixState& s) { return LogAdd(s.p_blank, s.p_nonblank); }

}  // namespace

std::string GreedyDecode(const Tensor& log_probs, const Vocabulary& vocab) {
  CheckShape(log_probs.Rank() == 2 && log_probs.Dim(1) == vocab.Size(), "greedy_decode",
             {log_probs.Dims()}, StrCat("expected [t,", vocab.Size(), "]"));
  const int64_t t_len = log_probs.Dim(0), n_sym = log_probs.Dim(1);
  std::vector<int> path(t_len);
  const float* lp = log_probs.Data().data();
  for (int64_t t = 0; t < t_len; ++t) {
    int best = 0;
    float best_lp = lp[t * n_sym];
    for (int s = 1; s < n_sym; ++s) {
      if (lp[t * n_sym + s] > best_lp) {
        best_lp = lp[t * n_sym + s];
        best = s;
      }
    }
    path[t] = best;
  }
  std::vector<int> collapsed;
  for (int64_t t = 0; t < t_len; ++t) {
    if (t > 0 && path[t] == path[t - 1]) continue;
    if (path[t] != Vocabulary::kBlankId) collapsed.push_back(path[t]);
  }
  return vocab.Decode(collapsed);
}

DecodeResult BeamSearchDecode(const Tensor& log_probs, const Vocabulary& vocab,
                              const NGramModel* lm, const BeamConfig& cfg) {
  CheckShape(log_probs.Rank() == 2 && log_probs.Dim(1) == vocab.Size(),
             "beam_search_decode", {log_probs.Dims()},
             StrCat("expected [t,", vocab.Size(), "]"));
  CLSW_CHECK(cfg.beam >= 1, "beam_search_decode: beam must be >= 1, got ", cfg.beam);
  CLSW_CHECK(std::isfinite(cfg.lm_weight) && std::isfinite(cfg.word_score),
             "beam_search_decode: lm_weight/word_score must be finite");
  const int64_t t_len = log_probs.Dim(0), n_sym = log_probs.Dim(1);
  const float* lp = log_probs.Data().data();
  const int delim = vocab.DelimiterId();

  // Word-boundary LM increment for closing `word` after `context`.
  auto word_bonus = [&](const PrefixState& s, const std::string& word) {
    double bonus = cfg.word_score;
    if (lm != nullptr && cfg.lm_weight != 0.0f)
      bonus += cfg.lm_weight * lm->ScoreWord(s.lm_context, word);
    return bonus;
  };
  auto push_word = [&](PrefixState* s) {
    if (s->partial_word.empty()) return;
    s->lm_acc += word_bonus(*s, s->partial_word);
    s->lm_context.push_back(s->partial_word);
    const size_t keep = lm ? static_cast<size_t>(std::max(0, lm->order() - 1)) : 0;
    while (s->lm_context.size() > keep) s->lm_context.erase(s->lm_context.begin());
    s->partial_word.clear();
  };

  // Beam keyed by the collapsed symbol prefix; std::map gives deterministic
  // iteration and lexicographic tie-breaks.
  std::map<std::vector<int>, PrefixState> beam;
  beam[{}].p_blank = 0.0;

  for (int64_t t = 0; t < t_len; ++t) {
    std::map<std::vector<int>, PrefixState> next;
    auto upd = [&](const std::vector<int>& prefix, const PrefixState& proto, bool blank_end,
                   double logp) {
      auto [it, inserted] = next.try_emplace(prefix);
      PrefixState& dst = it->second;
      if (inserted) {
        dst.lm_acc = proto.lm_acc;
        dst.lm_context = proto.lm_context;
        dst.partial_word = proto.partial_word;
      }
      if (blank_end) {
        dst.p_blank = LogAdd(dst.p_blank, logp);
      } else {
        dst.p_nonblank = LogAdd(dst.p_nonblank, logp);
      }
    };

    for (const auto& [prefix, state] : beam) {
      const double p_total = TotalLog(state);
      for (int s = 0; s < n_sym; ++s) {
        const double symbol_lp = lp[t * n_sym + s];
        if (s == Vocabulary::kBlankId) {
          upd(prefix, state, /*blank_end=*/true, p_total + symbol_lp);
          continue;
        }
        if (!prefix.empty() && prefix.back() == s) {
          // Repeated symbol merges into the same prefix...
          upd(prefix, state, false, state.p_nonblank + symbol_lp);
          // ...or starts a new occurrence across a blank.
          std::vector<int> ext = prefix;
          ext.push_back(s);
          PrefixState proto = state;
          if (s == delim) {
            push_word(&proto);
          } else {
            proto.partial_word += vocab.Symbol(s);
          }
          upd(ext, proto, false, state.p_blank + symbol_lp);
          continue;
        }
        std::vector<int> ext = prefix;
        ext.push_back(s);
        PrefixState proto = state;
        if (s == delim) {
          push_word(&proto);
        } else {
          proto.partial_word += vocab.Symbol(s);
        }
        upd(ext, proto, false, p_total + symbol_lp);
      }
    }

    // Prune to the beam width by combined score; ties break lexicographically
    // because candidates arrive in map order and the sort is stable.
    std::vector<std::pair<const std::vector<int>*, const PrefixState*>> ranked;
    ranked.reserve(next.size());
    for (const auto& [prefix, state] : next) ranked.emplace_back(&prefix, &state);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return TotalLog(*a.second) + a.second->lm_acc >
             TotalLog(*b.second) + b.second->lm_acc;
    });
    std::map<std::vector<int>, PrefixState> pruned;
    for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(cfg.beam); ++i)
      pruned.emplace(*ranked[i].first, *ranked[i].second);
    beam = std::move(pruned);
  }

  // Finalize: close the trailing partial word so hypotheses compare on the
  // full text, then rank.
  std::vector<std::pair<std::vector<int>, double>> finals;
  finals.reserve(beam.size());
  for (auto& [prefix, state] : beam) {
    PrefixState s = state;
    push_word(&s);
    finals.emplace_back(prefix, TotalLog(state) + s.lm_acc);
  }
  std::stable_sort(finals.begin(), finals.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  DecodeResult result;
  CLSW_CHECK(!finals.empty(), "beam_search_decode: empty beam");
  result.best = vocab.Decode(finals[0].first);
  result.score = finals[0].second;
  for (size_t i = 0; i < finals.size() && i < static_cast<size_t>(cfg.nbest); ++i)
    result.nbest.emplace_back(vocab.Decode(finals[i].first), finals[i].second);
  return result;
}

}  // namespace clsw
