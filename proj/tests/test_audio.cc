// tests/test_audio.cc

#include <cmath>
#include <cstring>
#include <filesystem>

#include "clsw/audio.h"
#include "clsw/common.h"
#include "clsw/fft.h"
#include "doctest.h"

using namespace clsw;

namespace {

// Minimal WAV builder for parser tests.
std::vector<uint8_t> BuildWav(int sample_rate, int channels, int bits,
                              const std::vector<int32_t>& frames) {
  std::vector<uint8_t> out;
  auto put_u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  auto put_u16 = [&](uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
  };
  auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  const uint32_t data_size =
      static_cast<uint32_t>(frames.size()) * channels * (bits / 8);
  put_tag("RIFF");
  put_u32(36 + data_size);
  put_tag("WAVE");
  put_tag("fmt ");
  put_u32(16);
  put_u16(1);
  put_u16(static_cast<uint16_t>(channels));
  put_u32(static_cast<uint32_t>(sample_rate));
  put_u32(static_cast<uint32_t>(sample_rate * channels * (bits / 8)));
  put_u16(static_cast<uint16_t>(channels * (bits / 8)));
  put_u16(static_cast<uint16_t>(bits));
  put_tag("data");
  put_u32(data_size);
  for (int32_t v : frames) {
    for (int c = 0; c < channels; ++c) {
      if (bits == 16) {
        put_u16(static_cast<uint16_t>(static_cast<int16_t>(v)));
      } else {
        out.push_back(static_cast<uint8_t>(v));
      }
    }
  }
  return out;
}

std::vector<float> Sine(double freq, int rate, double seconds) {
  std::vector<float> x(static_cast<size_t>(rate * seconds));
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = static_cast<float>(0.5 * std::sin(2.0 * M_PI * freq * i / rate));
  return x;
}

double DominantFrequency(std::span<const float> x, int rate) {
  const int n = 16384;
  REQUIRE(static_cast<int>(x.size()) >= n);
  std::vector<double> power = PowerSpectrum(x.subspan(0, n), n);
  size_t best = 1;
  for (size_t k = 2; k + 1 < power.size(); ++k)
    if (power[k] > power[best]) best = k;
  return static_cast<double>(best) * rate / n;
}

}  // namespace

TEST_CASE("16 kHz mono 16-bit passes through up to integer scaling") {
  std::vector<int32_t> frames = {0, 16384, -16384, 32767, -32768};
  AudioBuffer buf = IngestConvert(BuildWav(16000, 1, 16, frames), "t");
  REQUIRE(buf.samples.size() == frames.size());
  CHECK(buf.sample_rate == 16000);
  for (size_t i = 0; i < frames.size(); ++i)
    CHECK(buf.samples[i] == doctest::Approx(frames[i] / 32768.0).epsilon(1e-6));
}

TEST_CASE("8-bit and stereo inputs convert to mono floats") {
  // 8-bit unsigned encoding: 128 is zero.
  AudioBuffer b8 = IngestConvert(BuildWav(16000, 1, 8, {128, 255, 0}), "t8");
  CHECK(b8.samples[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(b8.samples[1] > 0.9f);
  CHECK(b8.samples[2] < -0.9f);

  // Stereo averaging: both channels carry the same value here.
  AudioBuffer b2 = IngestConvert(BuildWav(16000, 2, 16, {1000, -1000}), "t2");
  CHECK(b2.samples[0] == doctest::Approx(1000 / 32768.0).epsilon(1e-6));
}

TEST_CASE("malformed and unsupported files are rejected loudly") {
  std::vector<uint8_t> junk = {'N', 'O', 'P', 'E', 0, 0, 0, 0};
  CHECK_THROWS_AS(ParseWav(junk, "junk"), DataError);

  std::vector<uint8_t> wav = BuildWav(16000, 1, 16, {0, 0});
  wav[20] = 3;  // format tag -> IEEE float, unsupported
  CHECK_THROWS_WITH_AS(ParseWav(wav, "float32"), doctest::Contains("codec"), DataError);

  std::vector<uint8_t> truncated = BuildWav(16000, 1, 16, {0, 0, 0, 0});
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(ParseWav(truncated, "trunc"), DataError);
}

TEST_CASE("8 kHz input of N samples resamples to 2N +- 1") {
  std::vector<float> in(1000, 0.1f);
  std::vector<float> out = Resample(in, 8000, 16000);
  CHECK(std::abs(static_cast<int64_t>(out.size()) - 2000) <= 1);
}

TEST_CASE("440 Hz sine at 44.1 kHz lands within 2 Hz after resampling") {
  std::vector<float> in = Sine(440.0, 44100, 1.5);
  std::vector<float> out = Resample(in, 44100, 16000);
  REQUIRE(out.size() > 16384);
  CHECK(DominantFrequency(out, 16000) == doctest::Approx(440.0).epsilon(0.005));
}

TEST_CASE("resampler preserves energy within 1 dB below 7 kHz") {
  for (double freq : {200.0, 1000.0, 3000.0, 6500.0}) {
    std::vector<float> in = Sine(freq, 44100, 1.0);
    std::vector<float> out = Resample(in, 44100, 16000);
    // Mean power comparison, trimming filter edges.
    auto mean_power = [](std::span<const float> x) {
      double acc = 0.0;
      for (size_t i = x.size() / 10; i < x.size() * 9 / 10; ++i)
        acc += static_cast<double>(x[i]) * x[i];
      return acc / (x.size() * 8 / 10);
    };
    const double ratio = mean_power(out) / mean_power(in);
    CHECK(std::abs(10.0 * std::log10(ratio)) < 1.0);
  }
}

TEST_CASE("wav writer round-trips through the parser") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "clsw_rt.wav").string();
  std::vector<float> x = Sine(500.0, 16000, 0.25);
  WriteWav16k(path, x);
  AudioBuffer back = ReadWav(path);
  REQUIRE(back.samples.size() == x.size());
  CHECK(back.sample_rate == 16000);
  double err = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    err = std::max(err, std::abs(static_cast<double>(back.samples[i]) - x[i]));
  CHECK(err < 1.0 / 32000.0);  // 16-bit quantization
  fs::remove(path);
}
