// benchmarks/bench_tensor.cc

#include <benchmark/benchmark.h>

#include "clsw/common.h"
#include "clsw/tensor.h"

namespace {

clsw::Tensor RandomTensor(clsw::Shape shape, uint64_t seed) {
  clsw::Rng rng(seed);
  std::vector<float> v(clsw::NumElements(shape));
  for (float& x : v) x = static_cast<float>(rng.Uniform() * 2.0 - 1.0);
  return clsw::Tensor(std::move(shape), std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  clsw::Tensor a = RandomTensor({n, n}, 1);
  clsw::Tensor b = RandomTensor({n, n}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(clsw::Matmul(a, b));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_Conv1dForward(benchmark::State& state) {
  const int64_t t = state.range(0);
  clsw::Tensor x = RandomTensor({t, 1}, 3);
  clsw::Tensor w = RandomTensor({64, 1, 10}, 4);
  clsw::Tensor bias = RandomTensor({64}, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(clsw::Conv1d(x, w, bias, 5, 0));
  }
}
BENCHMARK(BM_Conv1dForward)->RangeMultiplier(4)->Range(1024, 65536);

void BM_SoftmaxBackward(benchmark::State& state) {
  const int64_t n = state.range(0);
  clsw::Tensor x = RandomTensor({n, n}, 6);
  for (auto _ : state) {
    clsw::Graph g;
    std::vector<float> grad(x.NumEl(), 0.0f);
    clsw::Tensor xl = g.Leaf(x, &grad);
    g.Backward(clsw::Sum(clsw::Softmax(xl, 1)));
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_SoftmaxBackward)->RangeMultiplier(2)->Range(32, 256);

}  // namespace

BENCHMARK_MAIN();
