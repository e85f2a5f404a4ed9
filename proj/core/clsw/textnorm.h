// clsw/textnorm.h

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

#ifndef CLSW_TEXTNORM_H_
#define CLSW_TEXTNORM_H_

#include <string>

namespace clsw {

// Lowercases Latin letters, strips punctuation (Latin set plus Devanagari
// danda), expands digit runs to words through the per-language number
// speller, and collapses whitespace. Languages without a speller keep digits
// verbatim (warned once per call).
std::string NormalizeText(const std::string& raw, const std::string& lang);

// Built-in spellers: "en" and "hi", integers below 10^6.
bool HasNumberSpeller(const std::string& lang);
std::string SpellNumber(int64_t n, const std::string& lang);

}  // namespace clsw

#endif  // CLSW_TEXTNORM_H_
