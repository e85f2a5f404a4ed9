// clsw/audio.cc

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

#include "clsw/audio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "clsw/common.h"

namespace clsw {

namespace {

uint32_t ReadU32Le(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | static_cast<uint32_t>(b[off + 1]) << 8 |
         static_cast<uint32_t>(b[off + 2]) << 16 | static_cast<uint32_t>(b[off + 3]) << 24;
}

uint16_t ReadU16Le(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint16_t>(b[off] | b[off + 1] << 8);
}

// Zeroth-order modified Bessel function, power series.
double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_sq = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

}  // namespace

AudioBuffer ParseWav(std::span<const uint8_t> bytes, const std::string& source_id) {
  CLSW_CHECK_DATA(bytes.size() >= 44, "wav '", source_id, "': file too small");
  CLSW_CHECK_DATA(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                      std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
                  "wav '", source_id, "': missing RIFF/WAVE header");
  size_t off = 12;
  int channels = 0, sample_rate = 0, bits = 0, format = 0;
  std::span<const uint8_t> data;
  while (off + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + off);
    const uint32_t size = ReadU32Le(bytes, off + 4);
    const size_t body = off + 8;
    CLSW_CHECK_DATA(body + size <= bytes.size(), "wav '", source_id,
                    "': truncated chunk '", std::string(tag, 4), "'");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      CLSW_CHECK_DATA(size >= 16, "wav '", source_id, "': short fmt chunk");
      format = ReadU16Le(bytes, body);
      channels = ReadU16Le(bytes, body + 2);
      sample_rate = static_cast<int>(ReadU32Le(bytes, body + 4));
      bits = ReadU16Le(bytes, body + 14);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.subspan(body, size);
    }
    off = body + size + (size % 2);  // chunks are word aligned
  }
  CLSW_CHECK_DATA(format != 0 && !data.empty(), "wav '", source_id,
                  "': missing fmt or data chunk");
  CLSW_CHECK_DATA(format == 1, "wav '", source_id, "': unsupported codec (format tag ",
                  format, "); only PCM is supported");
  CLSW_CHECK_DATA(channels >= 1 && channels <= 2, "wav '", source_id,
                  "': unsupported channel count ", channels);
  CLSW_CHECK_DATA(bits == 8 || bits == 16, "wav '", source_id,
                  "': unsupported bit depth ", bits);
  CLSW_CHECK_DATA(sample_rate > 0, "wav '", source_id, "': bad sample rate");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_size = bytes_per_sample * channels;
  const size_t n_frames = data.size() / frame_size;
  AudioBuffer buf;
  buf.sample_rate = sample_rate;
  buf.source_id = source_id;
  buf.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const size_t p = i * frame_size + c * bytes_per_sample;
      if (bits == 8) {
        acc += (static_cast<int>(data[p]) - 128) / 128.0;
      } else {
        const int16_t v = static_cast<int16_t>(data[p] | data[p + 1] << 8);
        acc += v / 32768.0;
      }
    }
    buf.samples[i] = static_cast<float>(acc / channels);
  }
  return buf;
}

AudioBuffer ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  CLSW_CHECK_DATA(is.good(), "wav: cannot open '", path, "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  return ParseWav(bytes, path);
}

void WriteWav16k(const std::string& path, std::span<const float> samples) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "wav: cannot write '", path, "'");
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  auto put_u32 = [&](uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    os.write(b, 4);
  };
  auto put_u16 = [&](uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    os.write(b, 2);
  };
  os.write("RIFF", 4);
  put_u32(36 + data_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(kTargetSampleRate);
  put_u32(kTargetSampleRate * 2);  // byte rate
  put_u16(2);                      // block align
  put_u16(16);                     // bits
  os.write("data", 4);
  put_u32(data_size);
  for (float s : samples) {
    const float clipped = std::clamp(s, -1.0f, 1.0f);
    const int16_t v = static_cast<int16_t>(std::lrint(clipped * 32767.0f));
    put_u16(static_cast<uint16_t>(v));
  }
  CLSW_CHECK_DATA(os.good(), "wav: write to '", path, "' failed");
}

std::vector<float> Resample(std::span<const float> in, int rate_in, int rate_out) {
  CLSW_CHECK(rate_in > 0 && rate_out > 0, "resample: bad rates ", rate_in, " -> ", rate_out);
  if (rate_in == rate_out) return std::vector<float>(in.begin(), in.end());
  if (in.empty()) return {};

  const double ratio = static_cast<double>(rate_out) / rate_in;
  const int64_t n_out = static_cast<int64_t>(std::llround(in.size() * ratio));
  // Half-width of 16 zero crossings at the lower rate; Kaiser beta 8.6.
  const double half_width = 16.0 * std::max(1.0, 1.0 / ratio);
  const double cutoff = 0.46 * std::min(1.0, ratio);  // cycles per input sample
  const double beta = 8.6;
  const double i0_beta = BesselI0(beta);

  std::vector<float> out(n_out);
  for (int64_t n = 0; n < n_out; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(center - half_width)));
    const int64_t hi = std::min<int64_t>(static_cast<int64_t>(in.size()) - 1,
                                         static_cast<int64_t>(std::floor(center + half_width)));
    double acc = 0.0, wsum = 0.0;
    for (int64_t i = lo; i <= hi; ++i) {
      const double x = static_cast<double>(i) - center;
      const double sinc_arg = 2.0 * cutoff * x;
      const double sinc = sinc_arg == 0.0 ? 1.0 : std::sin(M_PI * sinc_arg) / (M_PI * sinc_arg);
      const double t = x / half_width;
      const double window = BesselI0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0_beta;
      const double w = sinc * window;
      acc += w * in[i];
      wsum += w;
    }
    out[n] = wsum > 1e-12 ? static_cast<float>(acc / wsum) : 0.0f;
  }
  return out;
}

AudioBuffer IngestConvert(std::span<const uint8_t> bytes, const std::string& source_id) {
  AudioBuffer raw = ParseWav(bytes, source_id);
  if (raw.sample_rate == kTargetSampleRate) return raw;
  AudioBuffer out;
  out.source_id = raw.source_id;
  out.sample_rate = kTargetSampleRate;
  out.samples = Resample(raw.samples, raw.sample_rate, kTargetSampleRate);
  return out;
}

AudioBuffer IngestConvertFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  CLSW_CHECK_DATA(is.good(), "wav: cannot open '", path, "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  return IngestConvert(bytes, path);
}

}  // namespace clsw
