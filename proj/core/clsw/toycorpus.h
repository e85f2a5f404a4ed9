// clsw/toycorpus.h

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

// Synthetic corpus generator: artificial "languages" distinguished by pitch
// and formant ranges, one tone-complex "phoneme" per character, with
// programmatic transcripts. The whole pipeline runs on it with zero external
// data.

#ifndef CLSW_TOYCORPUS_H_
#define CLSW_TOYCORPUS_H_

#include <string>
#include <vector>

#include "clsw/common.h"
#include "clsw/ssl.h"

namespace clsw {

struct ToyLanguageSpec {
  std::string name;
  std::vector<std::string> chars;   // single-letter inventory
  std::vector<double> char_freqs;   // carrier per character, Hz
  double pitch_hz = 120.0;          // amplitude-modulation rate
};

struct ToyCorpusConfig {
  int num_languages = 3;
  double minutes_per_language = 2.0;
  double char_seconds = 0.12;
  double word_gap_seconds = 0.06;
  double edge_silence_seconds = 0.15;
  int min_word_len = 2, max_word_len = 4;
  int min_words = 2, max_words = 5;
  double clean_noise_rms = 0.0003;  // near-silent hiss on clean utterances
  double noisy_fraction = 0.0;      // fraction synthesized too noisy to keep
  uint64_t seed = 1;
};

struct ToyUtterance {
  std::string id;
  std::string language;
  std::string transcript;
  std::vector<float> samples;  // 16 kHz mono
  bool noisy = false;
};

// Built-in language inventory (up to 5 languages: alpha, bravo, charlie,
// delta, echo) with disjoint character sets and scaled formant ladders.
std::vector<ToyLanguageSpec> DefaultToyLanguages(int n);

std::string RandomToyTranscript(const ToyLanguageSpec& lang, const ToyCorpusConfig& cfg,
                                Rng* rng);

ToyUtterance SynthesizeToyUtterance(const ToyLanguageSpec& lang, const std::string& id,
                                    const std::string& transcript,
                                    const ToyCorpusConfig& cfg, bool noisy, Rng* rng);

// In-memory corpus (used by tests and the acceptance suite).
std::vector<ToyUtterance> GenerateToyCorpus(const ToyCorpusConfig& cfg);

// On-disk layout: audio/<language>/<id>.wav, transcripts.tsv
// (id / language / transcript), and lm/<language>.txt.
void WriteToyCorpus(const ToyCorpusConfig& cfg, const std::string& out_dir);

// Vocabulary (chars + delimiter) for one toy language.
std::vector<std::string> ToyVocabularySymbols(const ToyLanguageSpec& lang);

}  // namespace clsw

#endif  // CLSW_TOYCORPUS_H_
