// clsw/metrics.h

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

#ifndef CLSW_METRICS_H_
#define CLSW_METRICS_H_

#include <string>
#include <vector>

namespace clsw {

// Levenshtein edit distance between token sequences.
int64_t EditDistance(const std::vector<std::string>& ref,
                     const std::vector<std::string>& hyp);

// Word error rate: edit distance over whitespace tokens divided by the
// reference word count. Empty reference raises DataError.
double Wer(const std::string& ref, const std::string& hyp);

// Character error rate over UTF-8 codepoints excluding spaces.
double Cer(const std::string& ref, const std::string& hyp);

}  // namespace clsw

#endif  // CLSW_METRICS_H_
