// tests/test_vad.cc

#include <cmath>

#include "clsw/common.h"
#include "clsw/vad.h"
#include "doctest.h"

using namespace clsw;

namespace {

AudioBuffer MakeBuffer(std::vector<float> samples) {
  AudioBuffer b;
  b.samples = std::move(samples);
  b.sample_rate = kTargetSampleRate;
  return b;
}

void AppendTone(std::vector<float>* x, double seconds, double amp, uint64_t seed) {
  Rng rng(seed);
  const size_t n = static_cast<size_t>(seconds * kTargetSampleRate);
  const size_t base = x->size();
  for (size_t i = 0; i < n; ++i)
    x->push_back(static_cast<float>(
        amp * std::sin(2.0 * M_PI * 300.0 * (base + i) / kTargetSampleRate) +
        0.001 * rng.Normal()));
}

void AppendSilence(std::vector<float>* x, double seconds, uint64_t seed) {
  Rng rng(seed);
  const size_t n = static_cast<size_t>(seconds * kTargetSampleRate);
  for (size_t i = 0; i < n; ++i) x->push_back(static_cast<float>(0.001 * rng.Normal()));
}

}  // namespace

TEST_CASE("digital silence produces zero chunks") {
  AudioBuffer buf = MakeBuffer(std::vector<float>(16000 * 4, 0.0f));
  CHECK(VadChunk(buf).empty());
}

TEST_CASE("a 2 s tone with 0.5 s padding yields one chunk of about 2 s") {
  std::vector<float> x;
  AppendSilence(&x, 0.5, 1);
  AppendTone(&x, 2.0, 0.4, 2);
  AppendSilence(&x, 0.5, 3);
  std::vector<ChunkSpan> chunks = VadChunk(MakeBuffer(std::move(x)));
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].DurationSeconds() == doctest::Approx(2.0).epsilon(0.06));
}

TEST_CASE("sub-second blips are dropped") {
  std::vector<float> x;
  AppendSilence(&x, 1.0, 1);
  AppendTone(&x, 0.4, 0.4, 2);
  AppendSilence(&x, 1.0, 3);
  CHECK(VadChunk(MakeBuffer(std::move(x))).empty());
}

TEST_CASE("gaps under 300 ms merge, larger gaps split") {
  std::vector<float> merged;
  AppendSilence(&merged, 0.5, 1);
  AppendTone(&merged, 1.2, 0.4, 2);
  AppendSilence(&merged, 0.2, 3);  // short gap: merges
  AppendTone(&merged, 1.2, 0.4, 4);
  AppendSilence(&merged, 0.5, 5);
  CHECK(VadChunk(MakeBuffer(std::move(merged))).size() == 1);

  std::vector<float> split;
  AppendSilence(&split, 0.5, 1);
  AppendTone(&split, 1.2, 0.4, 2);
  AppendSilence(&split, 0.8, 3);  // long gap: separate chunks
  AppendTone(&split, 1.2, 0.4, 4);
  AppendSilence(&split, 0.5, 5);
  CHECK(VadChunk(MakeBuffer(std::move(split))).size() == 2);
}

TEST_CASE("45 s of continuous speech splits into chunks within [1, 30] s") {
  std::vector<float> x;
  AppendSilence(&x, 0.5, 1);
  // Continuous voiced signal with a soft dip every 6 s (natural split points).
  Rng rng(7);
  const size_t n = static_cast<size_t>(45.0 * kTargetSampleRate);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kTargetSampleRate;
    const double dip = 0.65 + 0.35 * std::cos(2.0 * M_PI * t / 6.0);
    x.push_back(static_cast<float>(0.4 * dip * std::sin(2.0 * M_PI * 280.0 * t) +
                                   0.001 * rng.Normal()));
  }
  AppendSilence(&x, 0.5, 2);
  std::vector<ChunkSpan> chunks = VadChunk(MakeBuffer(std::move(x)));
  REQUIRE(chunks.size() >= 2);
  for (const ChunkSpan& c : chunks) {
    CHECK(c.DurationSeconds() >= 1.0 - 1e-9);
    CHECK(c.DurationSeconds() <= 30.0 + 1e-9);
  }
}

TEST_CASE("aggressiveness mode maps to the documented margins") {
  // A quiet tone about 9 dB above the floor is kept at mode 0 (6 dB margin)
  // and rejected at mode 3 (15 dB margin).
  std::vector<float> x;
  AppendSilence(&x, 1.0, 1);
  const size_t base = x.size();
  for (size_t i = 0; i < static_cast<size_t>(1.5 * kTargetSampleRate); ++i)
    x.push_back(static_cast<float>(
        0.0040 * std::sin(2.0 * M_PI * 300.0 * (base + i) / kTargetSampleRate)));
  AppendSilence(&x, 1.0, 2);
  AudioBuffer buf = MakeBuffer(std::move(x));
  VadConfig lenient;
  lenient.mode = 0;
  VadConfig strict;
  strict.mode = 3;
  CHECK(VadChunk(buf, lenient).size() == 1);
  CHECK(VadChunk(buf, strict).empty());
  VadConfig bad;
  bad.mode = 7;
  CHECK_THROWS_AS(VadChunk(buf, bad), ConfigError);
}
