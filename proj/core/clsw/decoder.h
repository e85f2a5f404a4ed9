// clsw/decoder.h

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

// CTC decoding: best-path ("Viterbi") decoding and prefix beam search with
// n-gram shallow fusion at word boundaries.

#ifndef CLSW_DECODER_H_
#define CLSW_DECODER_H_

#include <string>
#include <vector>

#include "clsw/finetune.h"
#include "clsw/ngram.h"
#include "clsw/tensor.h"

namespace clsw {

// Per-frame argmax, collapse repeats, drop blanks, map the delimiter to
// space. Ties break toward the lowest symbol index.
std::string GreedyDecode(const Tensor& log_probs, const Vocabulary& vocab);

struct BeamConfig {
  int beam = 128;
  float lm_weight = 1.2f;   // lambda_lm
  float word_score = 0.5f;  // beta per completed word
  int nbest = 5;
};

struct DecodeResult {
  std::string best;
  double score = 0.0;
  std::vector<std::pair<std::string, double>> nbest;
};

// CTC prefix beam search. Duplicate prefixes merge by logaddexp; candidates
// are ranked by combined acoustic+LM score with deterministic lexicographic
// tie-breaking. `lm` may be null (pure acoustic search).
DecodeResult BeamSearchDecode(const Tensor& log_probs, const Vocabulary& vocab,
                              const NGramModel* lm, const BeamConfig& cfg);

}  // namespace clsw

#endif  // CLSW_DECODER_H_
