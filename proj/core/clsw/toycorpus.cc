// clsw/toycorpus.cc

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

#include "clsw/toycorpus.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "clsw/audio.h"

namespace clsw {

std::vector<ToyLanguageSpec> DefaultToyLanguages(int n) {
  CLSW_CHECK(n >= 1 && n <= 5, "toy corpus: 1-5 languages supported, got ", n);
  // Disjoint character sets; carriers ascend per character and scale per
  // language so languages share structure but occupy shifted bands.
  static const std::vector<std::vector<std::string>> kCharSets = {
      {"a", "e", "i", "o", "u"},
      {"k", "l", "m", "n", "p"},
      {"r", "s", "t", "v", "z"},
      {"b", "d", "f", "g", "h"},
      {"c", "j", "q", "w", "x"},
  };
  static const double kPitches[] = {110.0, 180.0, 150.0, 220.0, 130.0};
  static const double kBandOffsets[] = {0.0, 260.0, 520.0, 130.0, 390.0};
  std::vector<ToyLanguageSpec> langs;
  static const char* kNames[] = {"alpha", "bravo", "charlie", "delta", "echo"};
  for (int i = 0; i < n; ++i) {
    ToyLanguageSpec spec;
    spec.name = kNames[i];
    spec.chars = kCharSets[i];
    spec.pitch_hz = kPitches[i];
    // Carrier ladder in a band where short analysis windows resolve the
    // characters well; each language occupies a shifted band.
    for (size_t c = 0; c < spec.chars.size(); ++c)
      spec.char_freqs.push_back(2000.0 + kBandOffsets[i] +
                                1100.0 * static_cast<double>(c));
    langs.push_back(std::move(spec));
  }
  return langs;
}

std::string RandomToyTranscript(const ToyLanguageSpec& lang, const ToyCorpusConfig& cfg,
                                Rng* rng) {
  const int n_words = cfg.min_words +
                      static_cast<int>(rng->UniformInt(cfg.max_words - cfg.min_words + 1));
  std::vector<std::string> words;
  for (int w = 0; w < n_words; ++w) {
    const int len = cfg.min_word_len +
                    static_cast<int>(rng->UniformInt(cfg.max_word_len - cfg.min_word_len + 1));
    std::string word;
    for (int c = 0; c < len; ++c)
      word += lang.chars[rng->UniformInt(static_cast<int64_t>(lang.chars.size()))];
    words.push_back(word);
  }
  return JoinStrings(words, " ");
}

ToyUtterance SynthesizeToyUtterance(const ToyLanguageSpec& lang, const std::string& id,
                                    const std::string& transcript,
                                    const ToyCorpusConfig& cfg, bool noisy, Rng* rng) {
  const int sr = kTargetSampleRate;
  const int char_len = static_cast<int>(cfg.char_seconds * sr);
  const int gap_len = static_cast<int>(cfg.word_gap_seconds * sr);
  const int edge_len = static_cast<int>(cfg.edge_silence_seconds * sr);
  const int attack = sr / 100;  // 10 ms fade

  ToyUtterance utt;
  utt.id = id;
  utt.language = lang.name;
  utt.transcript = transcript;
  utt.noisy = noisy;

  std::vector<float> wave(edge_len, 0.0f);
  for (char ch : transcript) {
    if (ch == ' ') {
      wave.insert(wave.end(), gap_len, 0.0f);
      continue;
    }
    int idx = -1;
    for (size_t c = 0; c < lang.chars.size(); ++c)
      if (lang.chars[c][0] == ch) idx = static_cast<int>(c);
    CLSW_CHECK_DATA(idx >= 0, "toy corpus: character '", std::string(1, ch),
                    "' not in language '", lang.name, "'");
    const double f = lang.char_freqs[idx];
    for (int i = 0; i < char_len; ++i) {
      const double t = static_cast<double>(i) / sr;
      double env = 1.0;
      if (i < attack) env = static_cast<double>(i) / attack;
      if (char_len - i < attack) env = static_cast<double>(char_len - i) / attack;
      const double am = 1.0 + 0.35 * std::sin(2.0 * M_PI * lang.pitch_hz * t);
      // Second-harmonic partial, folded back under Nyquist for the upper
      // characters so every character keeps a unique two-tone signature.
      const double h = 2.0 * f;
      const double f2 = h > 7800.0 ? 15600.0 - h : h;
      // Zero starting phase: each character is a repeatable waveform, the
      // way pulse-aligned harmonics are, not a random-phase tone.
      const double carrier = std::sin(2.0 * M_PI * f * t) +
                             0.45 * std::sin(2.0 * M_PI * f2 * t);
      wave.push_back(static_cast<float>(0.24 * env * am * carrier));
    }
  }
  wave.insert(wave.end(), edge_len, 0.0f);

  const double noise_rms = noisy ? 0.035 : cfg.clean_noise_rms;
  for (float& x : wave) x += static_cast<float>(noise_rms * rng->Normal());
  utt.samples = std::move(wave);
  return utt;
}

std::vector<ToyUtterance> GenerateToyCorpus(const ToyCorpusConfig& cfg) {
  const std::vector<ToyLanguageSpec> langs = DefaultToyLanguages(cfg.num_languages);
  std::vector<ToyUtterance> corpus;
  for (size_t li = 0; li < langs.size(); ++li) {
    Rng rng = Rng(cfg.seed).Fork(HashString(langs[li].name));
    const double target_samples = cfg.minutes_per_language * 60.0 * kTargetSampleRate;
    double produced = 0.0;
    int idx = 0;
    while (produced < target_samples) {
      const std::string transcript = RandomToyTranscript(langs[li], cfg, &rng);
      const bool noisy = rng.Uniform() < cfg.noisy_fraction;
      ToyUtterance utt = SynthesizeToyUtterance(
          langs[li], StrCat(langs[li].name, "_", idx), transcript, cfg, noisy, &rng);
      produced += static_cast<double>(utt.samples.size());
      corpus.push_back(std::move(utt));
      ++idx;
    }
  }
  return corpus;
}

void WriteToyCorpus(const ToyCorpusConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const std::vector<ToyUtterance> corpus = GenerateToyCorpus(cfg);
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "lm", ec);

  std::ofstream transcripts((fs::path(out_dir) / "transcripts.tsv").string(),
                            std::ios::trunc);
  CLSW_CHECK_DATA(transcripts.good(), "toy corpus: cannot write transcripts.tsv");
  std::map<std::string, std::ofstream> lm_files;
  for (const ToyUtterance& utt : corpus) {
    const fs::path lang_dir = fs::path(out_dir) / "audio" / utt.language;
    fs::create_directories(lang_dir, ec);
    WriteWav16k((lang_dir / (utt.id + ".wav")).string(), utt.samples);
    transcripts << utt.id << '\t' << utt.language << '\t' << utt.transcript << '\n';
    auto [it, inserted] = lm_files.try_emplace(utt.language);
    if (inserted) {
      it->second.open((fs::path(out_dir) / "lm" / (utt.language + ".txt")).string(),
                      std::ios::trunc);
      CLSW_CHECK_DATA(it->second.good(), "toy corpus: cannot write lm text for ",
                      utt.language);
    }
    if (!utt.noisy) it->second << utt.transcript << '\n';
  }
}

std::vector<std::string> ToyVocabularySymbols(const ToyLanguageSpec& lang) {
  std::vector<std::string> symbols = lang.chars;
  symbols.push_back("|");
  return symbols;
}

}  // namespace clsw
