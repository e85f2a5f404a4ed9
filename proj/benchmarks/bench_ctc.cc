// benchmarks/bench_ctc.cc

#include <benchmark/benchmark.h>

#include "clsw/common.h"
#include "clsw/ctc.h"
#include "clsw/tensor.h"

namespace {

void BM_CtcLossForward(benchmark::State& state) {
  const int64_t t = state.range(0);
  const int64_t symbols = 30;
  clsw::Rng rng(7);
  std::vector<float> logits(t * symbols);
  for (float& x : logits) x = static_cast<float>(rng.Uniform() * 4.0 - 2.0);
  clsw::Tensor lp = clsw::LogSoftmax(clsw::Tensor({t, symbols}, logits), 1);
  std::vector<int> target;
  for (int i = 0; i < 20; ++i) target.push_back(1 + static_cast<int>(rng.UniformInt(symbols - 1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(clsw::CtcLoss(lp, target));
  }
}
BENCHMARK(BM_CtcLossForward)->RangeMultiplier(2)->Range(64, 1024);

void BM_CtcLossBackward(benchmark::State& state) {
  const int64_t t = state.range(0);
  const int64_t symbols = 30;
  clsw::Rng rng(7);
  clsw::Shape shape{t, symbols};
  std::vector<float> logits(t * symbols);
  for (float& x : logits) x = static_cast<float>(rng.Uniform() * 4.0 - 2.0);
  clsw::Tensor raw({t, symbols}, logits);
  std::vector<int> target;
  for (int i = 0; i < 20; ++i) target.push_back(1 + static_cast<int>(rng.UniformInt(symbols - 1)));
  for (auto _ : state) {
    clsw::Graph g;
    std::vector<float> grad(raw.NumEl(), 0.0f);
    clsw::Tensor leaf = g.Leaf(raw, &grad);
    g.Backward(clsw::CtcLoss(clsw::LogSoftmax(leaf, 1), target));
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_CtcLossBackward)->RangeMultiplier(2)->Range(64, 512);

}  // namespace
