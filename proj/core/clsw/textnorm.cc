// clsw/textnorm.cc

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

#include "clsw/textnorm.h"

#include <cstdint>
#include <set>
#include <vector>

#include "clsw/common.h"

namespace clsw {

namespace {

// Decodes UTF-8 into codepoints; malformed bytes pass through as U+FFFD.
std::vector<uint32_t> DecodeUtf8(const std::string& s) {
  std::vector<uint32_t> cps;
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    uint32_t cp = 0xFFFD;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < s.size()) {
      cp = (c & 0x1F) << 6 | (s[i + 1] & 0x3F);
      len = 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < s.size()) {
      cp = (c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && i + 3 < s.size()) {
      cp = (c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 | (s[i + 2] & 0x3F) << 6 |
           (s[i + 3] & 0x3F);
      len = 4;
    }
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

void EncodeUtf8(uint32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool IsPunct(uint32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    return std::string("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~").find(c) != std::string::npos;
  }
  switch (cp) {
    case 0x0964:  // danda
    case 0x0965:  // double danda
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2013:
    case 0x2014:
    case 0x2026:
      return true;
    default:
      return false;
  }
}

// ASCII or Devanagari digit value; -1 otherwise.
int DigitValue(uint32_t cp) {
  if (cp >= '0' && cp <= '9') return static_cast<int>(cp - '0');
  if (cp >= 0x0966 && cp <= 0x096F) return static_cast<int>(cp - 0x0966);
  return -1;
}

const char* const kEnOnes[] = {"zero", "one",  "two", "three", "four",
                               "five", "six",  "seven", "eight", "nine",
                               "ten",  "eleven", "twelve", "thirteen", "fourteen",
                               "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
const char* const kEnTens[] = {"", "", "twenty", "thirty", "forty", "fifty",
                               "sixty", "seventy", "eighty", "ninety"};

std::string SpellEnglishBelowThousand(int n) {
  std::string out;
  if (n >= 100) {
    out += std::string(kEnOnes[n / 100]) + " hundred";
    n %= 100;
    if (n) out += " ";
  }
  if (n >= 20) {
    out += kEnTens[n / 10];
    if (n % 10) out += std::string(" ") + kEnOnes[n % 10];
  } else if (n > 0 || out.empty()) {
    if (!(n == 0 && !out.empty())) out += kEnOnes[n];
  }
  return out;
}

std::string SpellEnglish(int64_t n) {
  if (n == 0) return "zero";
  std::string out;
  if (n >= 1000) {
    out += SpellEnglishBelowThousand(static_cast<int>(n / 1000)) + " thousand";
    n %= 1000;
    if (n) out += " ";
  }
  if (n) out += SpellEnglishBelowThousand(static_cast<int>(n));
  return out;
}

const char* const kHiBelowHundred[] = {
    "शून्य", "एक", "दो", "तीन", "चार", "पाँच", "छह", "सात", "आठ", "नौ",
    "दस", "ग्यारह", "बारह", "तेरह", "चौदह", "पंद्रह", "सोलह", "सत्रह", "अठारह", "उन्नीस",
    "बीस", "इक्कीस", "बाईस", "तेईस", "चौबीस", "पच्चीस", "छब्बीस", "सत्ताईस", "अट्ठाईस", "उनतीस",
    "तीस", "इकतीस", "बत्तीस", "तैंतीस", "चौंतीस", "पैंतीस", "छत्तीस", "सैंतीस", "अड़तीस", "उनतालीस",
    "चालीस", "इकतालीस", "बयालीस", "तैंतालीस", "चवालीस", "पैंतालीस", "छियालीस", "सैंतालीस",
    "अड़तालीस", "उनचास",
    "पचास", "इक्यावन", "बावन", "तिरपन", "चौवन", "पचपन", "छप्पन", "सत्तावन", "अट्ठावन", "उनसठ",
    "साठ", "इकसठ", "बासठ", "तिरसठ", "चौंसठ", "पैंसठ", "छियासठ", "सड़सठ", "अड़सठ", "उनहत्तर",
    "सत्तर", "इकहत्तर", "बहत्तर", "तिहत्तर", "चौहत्तर", "पचहत्तर", "छिहत्तर", "सतहत्तर",
    "अठहत्तर", "उनासी",
    "अस्सी", "इक्यासी", "बयासी", "तिरासी", "चौरासी", "पचासी", "छियासी", "सत्तासी", "अट्ठासी",
    "नवासी",
    "नब्बे", "इक्यानवे", "बानवे", "तिरानवे", "चौरानवे", "पंचानवे", "छियानवे", "सत्तानवे",
    "अट्ठानवे", "निन्यानवे"};

std::string SpellHindi(int64_t n) {
  if (n < 100) return kHiBelowHundred[n];
  std::string out;
  if (n >= 100000) {  // lakh
    out += SpellHindi(n / 100000) + " लाख";
    n %= 100000;
    if (n) out += " ";
  }
  if (n >= 1000) {
    out += SpellHindi(n / 1000) + " हज़ार";
    n %= 1000;
    if (n) out += " ";
  }
  if (n >= 100) {
    out += SpellHindi(n / 100) + " सौ";
    n %= 100;
    if (n) out += " ";
  }
  if (n) out += kHiBelowHundred[n];
  return out;
}

}  // namespace

bool HasNumberSpeller(const std::string& lang) { return lang == "en" || lang == "hi"; }

std::string SpellNumber(int64_t n, const std::string& lang) {
  CLSW_CHECK(n >= 0 && n < 1000000, "SpellNumber: ", n, " outside supported range [0, 10^6)");
  if (lang == "en") return SpellEnglish(n);
  if (lang == "hi") return SpellHindi(n);
  throw ConfigError("SpellNumber: no speller for language '" + lang + "'");
}

std::string NormalizeText(const std::string& raw, const std::string& lang) {
  const std::vector<uint32_t> cps = DecodeUtf8(raw);
  const bool speller = HasNumberSpeller(lang);
  bool warned = false;

  std::string out;
  size_t i = 0;
  while (i < cps.size()) {
    const uint32_t cp = cps[i];
    if (DigitValue(cp) >= 0) {
      // Consume the digit run.
      int64_t value = 0;
      size_t digits = 0;
      size_t j = i;
      while (j < cps.size() && DigitValue(cps[j]) >= 0) {
        value = value * 10 + DigitValue(cps[j]);
        ++digits;
        ++j;
      }
      if (speller && digits <= 6 && value < 1000000) {
        out += " " + SpellNumber(value, lang) + " ";
      } else {
        if (!speller && !warned) {
          Warn("normalize_text: no number speller for language '" + lang +
               "'; digits kept verbatim");
          warned = true;
        }
        if (speller && !warned && digits > 6) {
          Warn("normalize_text: digit run longer than supported; kept verbatim");
          warned = true;
        }
        for (size_t k = i; k < j; ++k) EncodeUtf8(cps[k], &out);
      }
      i = j;
      continue;
    }
    if (IsPunct(cp)) {
      ++i;
      continue;
    }
    if (cp == '\t' || cp == '\n' || cp == '\r') {
      out.push_back(' ');
      ++i;
      continue;
    }
    uint32_t emit = cp;
    if (cp >= 'A' && cp <= 'Z') emit = cp - 'A' + 'a';
    EncodeUtf8(emit, &out);
    ++i;
  }

  // Collapse whitespace.
  std::string collapsed;
  bool prev_space = true;
  for (char c : out) {
    if (c == ' ') {
      if (prev_space) continue;
      prev_space = true;
      collapsed.push_back(' ');
    } else {
      prev_space = false;
      collapsed.push_back(c);
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

}  // namespace clsw
