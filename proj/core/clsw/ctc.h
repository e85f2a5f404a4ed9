// clsw/ctc.h

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

#ifndef CLSW_CTC_H_
#define CLSW_CTC_H_

#include <vector>

#include "clsw/tensor.h"

namespace clsw {

// Minimal number of frames that can align to `target` (repeats need a blank
// in between).
int64_t CtcMinFrames(const std::vector<int>& target);

// -log P(target | log_probs) marginalized over all blank-augmented alignments,
// computed by the forward DP in log space (double precision internally).
// log_probs: [T, S] with the blank at index `blank`. Differentiable through
// the DP. An infeasible case (T < CtcMinFrames) returns +inf off-tape and
// warns; callers skip such utterances.
Tensor CtcLoss(const Tensor& log_probs, const std::vector<int>& target, int blank = 0);

}  // namespace clsw

#endif  // CLSW_CTC_H_
