// clsw/vad.h

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

// Energy-based voice activity detection: 30 ms frames / 10 ms hop, smoothed
// log energy against a noise floor estimated from the quietest decile, with
// hangover merging and 1-30 s chunk bounds.

#ifndef CLSW_VAD_H_
#define CLSW_VAD_H_

#include <cstdint>
#include <vector>

#include "clsw/audio.h"

namespace clsw {

struct VadConfig {
  int mode = 2;  // aggressiveness 0-3 -> margin 6/9/12/15 dB over the floor
  double min_chunk_sec = 1.0;
  double max_chunk_sec = 30.0;
  double max_gap_sec = 0.3;       // voiced runs closer than this merge
  double split_window_sec = 5.0;  // over-long chunks split at the quietest
                                  // frame inside this trailing window
};

struct ChunkSpan {
  int64_t start = 0;  // sample offsets, [start, end)
  int64_t end = 0;
  double DurationSeconds() const {
    return static_cast<double>(end - start) / kTargetSampleRate;
  }
};

std::vector<ChunkSpan> VadChunk(const AudioBuffer& buf, const VadConfig& cfg = {});

}  // namespace clsw

#endif  // CLSW_VAD_H_
