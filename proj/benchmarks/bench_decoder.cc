// benchmarks/bench_decoder.cc

#include <benchmark/benchmark.h>

#include "clsw/decoder.h"

namespace {

clsw::Tensor RandomEmissions(int64_t t, int64_t symbols, uint64_t seed) {
  clsw::Rng rng(seed);
  std::vector<float> logits(t * symbols);
  for (float& x : logits) x = static_cast<float>(rng.Uniform() * 4.0 - 2.0);
  return clsw::LogSoftmax(clsw::Tensor({t, symbols}, logits), 1);
}

void BM_GreedyDecode(benchmark::State& state) {
  clsw::Vocabulary vocab = clsw::Vocabulary::FromSymbols({"a", "b", "c", "d", "e", "|"});
  clsw::Tensor lp = RandomEmissions(state.range(0), vocab.Size(), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(clsw::GreedyDecode(lp, vocab));
  }
}
BENCHMARK(BM_GreedyDecode)->RangeMultiplier(4)->Range(64, 4096);

void BM_BeamSearch(benchmark::State& state) {
  clsw::Vocabulary vocab = clsw::Vocabulary::FromSymbols({"a", "b", "c", "d", "e", "|"});
  clsw::Tensor lp = RandomEmissions(200, vocab.Size(), 3);
  clsw::NGramModel lm = clsw::NGramModel::Train(
      {"ab cde ab", "cde ab ba", "ab ab cde", "ba cde"}, 3);
  clsw::BeamConfig cfg;
  cfg.beam = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(clsw::BeamSearchDecode(lp, vocab, &lm, cfg));
  }
}
BENCHMARK(BM_BeamSearch)->RangeMultiplier(4)->Range(2, 128);

}  // namespace
