// clsw/metrics.cc

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

#include "clsw/metrics.h"

#include <algorithm>
#include <sstream>

#include "clsw/common.h"

namespace clsw {

namespace {

std::vector<std::string> Words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

// UTF-8 codepoints as strings, spaces excluded.
std::vector<std::string> Chars(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    const std::string ch = text.substr(i, len);
    if (ch != " ") out.push_back(ch);
    i += len;
  }
  return out;
}

}  // namespace

int64_t EditDistance(const std::vector<std::string>& ref,
                     const std::vector<std::string>& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<int64_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int64_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double Wer(const std::string& ref, const std::string& hyp) {
  const std::vector<std::string> r = Words(ref);
  CLSW_CHECK_DATA(!r.empty(), "wer: empty reference");
  return static_cast<double>(EditDistance(r, Words(hyp))) / static_cast<double>(r.size());
}

double Cer(const std::string& ref, const std::string& hyp) {
  const std::vector<std::string> r = Chars(ref);
  CLSW_CHECK_DATA(!r.empty(), "cer: empty reference");
  return static_cast<double>(EditDistance(r, Chars(hyp))) / static_cast<double>(r.size());
}

}  // namespace clsw
