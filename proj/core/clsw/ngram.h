// clsw/ngram.h

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

// Backoff n-gram language model with interpolated absolute discounting:
//   P(w|h) = max(c(hw)-d, 0)/c(h) + lambda(h) P(w|h'),
//   lambda(h) = d N1+(h) / c(h).
// Counts come from per-line token streams; unigrams are the MLE over tokens.
// Unknown words (and the end-of-sequence term) score a constant floor.

#ifndef CLSW_NGRAM_H_
#define CLSW_NGRAM_H_

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clsw/common.h"

namespace clsw {

class NGramModel {
 public:
  NGramModel() = default;

  static NGramModel Train(const std::vector<std::string>& lines, int order,
                          double discount = 0.75);

  int order() const { return order_; }
  size_t VocabSize() const;
  bool Known(const std::string& word) const;
  double unk_logprob() const { return unk_logprob_; }

  // Natural-log conditional probability with standard backoff walk. The
  // context is the most recent history, oldest first; out-of-vocabulary
  // context words simply never match and fall through to shorter histories.
  double ScoreWord(std::span<const std::string> context, const std::string& word) const;

  // Sum of per-word conditional log probs with sentence-start padding plus
  // the end-of-sequence floor term.
  double ScoreSequence(const std::vector<std::string>& words) const;

  // All words with unigram mass, sorted (used by the mass-conservation
  // checks and the serializer).
  std::vector<std::string> VocabWords() const;

  // ARPA-style sorted text table (log10 probabilities and backoffs).
  void Save(const std::string& path) const;
  static NGramModel Load(const std::string& path);

 private:
  struct Entry {
    double logp = 0.0;          // natural log conditional probability
    double log_backoff = 0.0;   // natural log lambda; 0 when absent
    bool has_backoff = false;
  };

  int order_ = 0;
  double discount_ = 0.75;
  double unk_logprob_ = -16.11809565095832;  // ln(1e-7)
  // tables_[k] holds (k+1)-grams keyed by space-joined tokens.
  std::vector<std::unordered_map<std::string, Entry>> tables_;
};

}  // namespace clsw

#endif  // CLSW_NGRAM_H_
