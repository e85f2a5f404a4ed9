// clsw/vad.cc

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

#include "clsw/vad.h"

#include <algorithm>
#include <cmath>

#include "clsw/common.h"

namespace clsw {

namespace {

constexpr int kFrameLen = 480;  // 30 ms at 16 kHz
constexpr int kHopLen = 160;    // 10 ms

double MarginDb(int mode) {
  switch (mode) {
    case 0: return 6.0;
    case 1: return 9.0;
    case 2: return 12.0;
    case 3: return 15.0;
    default:
      throw ConfigError(StrCat("vad: mode must be 0-3, got ", mode));
  }
}

std::vector<double> FrameEnergiesDb(std::span<const float> x) {
  if (static_cast<int64_t>(x.size()) < kFrameLen) return {};
  const int64_t n_frames = (static_cast<int64_t>(x.size()) - kFrameLen) / kHopLen + 1;
  std::vector<double> db(n_frames);
  for (int64_t f = 0; f < n_frames; ++f) {
    double e = 0.0;
    const float* p = x.data() + f * kHopLen;
    for (int i = 0; i < kFrameLen; ++i) e += static_cast<double>(p[i]) * p[i];
    db[f] = 10.0 * std::log10(e + 1e-12);
  }
  return db;
}

std::vector<double> Smooth(const std::vector<double>& v, int radius) {
  std::vector<double> out(v.size());
  for (int64_t i = 0; i < static_cast<int64_t>(v.size()); ++i) {
    double acc = 0.0;
    int n = 0;
    for (int64_t j = std::max<int64_t>(0, i - radius);
         j <= std::min<int64_t>(v.size() - 1, i + radius); ++j) {
      acc += v[j];
      ++n;
    }
    out[i] = acc / n;
  }
  return out;
}

// Splits [start_f, end_f) frame runs longer than max_frames at the quietest
// frame within the trailing window of the first max_frames stretch.
void SplitLongRun(int64_t start_f, int64_t end_f, const std::vector<double>& energy,
                  int64_t max_frames, int64_t window_frames,
                  std::vector<std::pair<int64_t, int64_t>>* out) {
  if (end_f - start_f <= max_frames) {
    out->push_back({start_f, end_f});
    return;
  }
  const int64_t hard_end = start_f + max_frames;
  const int64_t win_lo = std::max(start_f + 1, hard_end - window_frames);
  int64_t cut = win_lo;
  for (int64_t f = win_lo; f < hard_end; ++f)
    if (energy[f] < energy[cut]) cut = f;
  out->push_back({start_f, cut});
  SplitLongRun(cut, end_f, energy, max_frames, window_frames, out);
}

}  // namespace

std::vector<ChunkSpan> VadChunk(const AudioBuffer& buf, const VadConfig& cfg) {
  CLSW_CHECK_DATA(buf.sample_rate == kTargetSampleRate,
                  "vad: expected 16 kHz input, got ", buf.sample_rate);
  const std::vector<double> energy = FrameEnergiesDb(buf.samples);
  if (energy.empty()) return {};
  const std::vector<double> smoothed = Smooth(energy, 2);

  // Noise floor: mean of the quietest decile.
  std::vector<double> sorted = smoothed;
  std::sort(sorted.begin(), sorted.end());
  const size_t decile = std::max<size_t>(1, sorted.size() / 10);
  double floor_db = 0.0;
  for (size_t i = 0; i < decile; ++i) floor_db += sorted[i];
  floor_db /= static_cast<double>(decile);
  const double threshold = floor_db + MarginDb(cfg.mode);

  std::vector<char> voiced(smoothed.size());
  for (size_t i = 0; i < smoothed.size(); ++i) voiced[i] = smoothed[i] > threshold ? 1 : 0;

  // Voiced runs with hangover merging.
  const int64_t max_gap_frames = static_cast<int64_t>(std::lround(cfg.max_gap_sec * 100));
  std::vector<std::pair<int64_t, int64_t>> runs;  // [start_f, end_f)
  int64_t run_start = -1;
  for (int64_t f = 0; f <= static_cast<int64_t>(voiced.size()); ++f) {
    const bool v = f < static_cast<int64_t>(voiced.size()) && voiced[f];
    if (v && run_start < 0) run_start = f;
    if (!v && run_start >= 0) {
      if (!runs.empty() && run_start - runs.back().second <= max_gap_frames) {
        runs.back().second = f;
      } else {
        runs.push_back({run_start, f});
      }
      run_start = -1;
    }
  }

  const int64_t max_frames = static_cast<int64_t>(std::lround(cfg.max_chunk_sec * 100));
  const int64_t window_frames = static_cast<int64_t>(std::lround(cfg.split_window_sec * 100));
  std::vector<std::pair<int64_t, int64_t>> bounded;
  for (const auto& [s, e] : runs) SplitLongRun(s, e, energy, max_frames, window_frames, &bounded);

  std::vector<ChunkSpan> chunks;
  for (const auto& [s, e] : bounded) {
    ChunkSpan span;
    span.start = s * kHopLen;
    span.end = std::min<int64_t>((e - 1) * kHopLen + kFrameLen,
                                 static_cast<int64_t>(buf.samples.size()));
    if (span.DurationSeconds() + 1e-9 < cfg.min_chunk_sec) continue;
    chunks.push_back(span);
  }
  return chunks;
}

}  // namespace clsw
