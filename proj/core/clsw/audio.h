// clsw/audio.h

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

// WAV ingestion (PCM 8/16-bit, 1-2 channels, any rate) to 16 kHz mono float,
// and the windowed-sinc resampler behind it.

#ifndef CLSW_AUDIO_H_
#define CLSW_AUDIO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clsw {

inline constexpr int kTargetSampleRate = 16000;

struct AudioBuffer {
  std::vector<float> samples;  // mono, [-1, 1]
  int sample_rate = kTargetSampleRate;
  std::string source_id;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// RIFF/PCM parser. Throws DataError on malformed headers or unsupported
// codecs (no silent skips).
AudioBuffer ParseWav(std::span<const uint8_t> bytes, const std::string& source_id);
AudioBuffer ReadWav(const std::string& path);

// 16-bit PCM mono writer at 16 kHz; samples are clipped to [-1, 1].
void WriteWav16k(const std::string& path, std::span<const float> samples);

// Kaiser-windowed sinc resampling with cutoff at the lower Nyquist. Equal
// rates return the input unchanged.
std::vector<float> Resample(std::span<const float> in, int rate_in, int rate_out);

// Parse, average to mono, resample to 16 kHz.
AudioBuffer IngestConvert(std::span<const uint8_t> bytes, const std::string& source_id);
AudioBuffer IngestConvertFile(const std::string& path);

}  // namespace clsw

#endif  // CLSW_AUDIO_H_
