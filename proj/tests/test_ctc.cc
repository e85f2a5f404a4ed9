// tests/test_ctc.cc

#include <cmath>
#include <limits>
#include <vector>

#include "clsw/ctc.h"
#include "clsw/tensor.h"
#include "doctest.h"
#include "testutil.h"

using namespace clsw;
using test::MaxGradError;
using test::RandomTensor;

namespace {

// Independent oracle: enumerate every S^T frame-label path, collapse repeats
// then drop blanks, and sum the probabilities of paths that spell `target`.
double BruteForceCtcLoss(const Tensor& log_probs, const std::vector<int>& target,
                         int blank = 0) {
  const int64_t t_len = log_probs.Dim(0), n_sym = log_probs.Dim(1);
  std::vector<int> path(t_len, 0);
  double total = 0.0;
  while (true) {
    double logp = 0.0;
    for (int64_t t = 0; t < t_len; ++t) logp += log_probs.Data()[t * n_sym + path[t]];
    std::vector<int> collapsed;
    for (int64_t t = 0; t < t_len; ++t) {
      if (t > 0 && path[t] == path[t - 1]) continue;
      if (path[t] != blank) collapsed.push_back(path[t]);
    }
    if (collapsed == target) total += std::exp(logp);
    // next path
    int64_t pos = t_len - 1;
    while (pos >= 0 && path[pos] == n_sym - 1) path[pos--] = 0;
    if (pos < 0) break;
    ++path[pos];
  }
  return -std::log(total);
}

Tensor RandomLogProbs(int64_t t_len, int64_t n_sym, uint64_t seed) {
  Rng rng(seed);
  Tensor logits = RandomTensor({t_len, n_sym}, &rng, 2.0f);
  return LogSoftmax(logits, 1);
}

}  // namespace

TEST_CASE("single frame, single symbol: loss is -log p") {
  // p(blank)=0.1, p(a)=0.9
  Tensor lp({1, 2}, {std::log(0.1f), std::log(0.9f)});
  CHECK(CtcLoss(lp, {1}).Item() == doctest::Approx(-std::log(0.9)).epsilon(1e-6));
}

TEST_CASE("two frames, uniform probs: alignments {aa, a-, -a} sum to 0.75") {
  Tensor lp({2, 2}, {std::log(0.5f), std::log(0.5f), std::log(0.5f), std::log(0.5f)});
  CHECK(CtcLoss(lp, {1}).Item() == doctest::Approx(-std::log(0.75)).epsilon(1e-6));
  CHECK(BruteForceCtcLoss(lp, {1}) == doctest::Approx(-std::log(0.75)).epsilon(1e-6));
}

TEST_CASE("DP equals brute-force enumeration on random 4-frame 3-symbol cases") {
  const std::vector<std::vector<int>> targets = {{1}, {2}, {1, 2}, {1, 1}, {2, 1}, {1, 2, 1}};
  for (uint64_t seed = 0; seed < 25; ++seed) {
    Tensor lp = RandomLogProbs(4, 3, 100 + seed);
    for (const auto& target : targets) {
      if (4 < CtcMinFrames(target)) continue;
      const double expected = BruteForceCtcLoss(lp, target);
      CHECK(CtcLoss(lp, target).Item() == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("ctc gradient matches finite differences on T=4 toys") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(55 + seed);
    Tensor raw = RandomTensor({4, 3}, &rng, 1.5f);
    const std::vector<int> target = {1, 2};
    CHECK(MaxGradError({raw}, [&](std::vector<Tensor>& in) {
            return CtcLoss(LogSoftmax(in[0], 1), target);
          }) < 1e-3);
  }
}

TEST_CASE("infeasible target returns +inf (skip-with-warning)") {
  Tensor lp = RandomLogProbs(1, 3, 7);
  Tensor loss = CtcLoss(lp, {1, 2});
  CHECK(std::isinf(loss.Item()));
  CHECK(loss.Item() > 0);
}

TEST_CASE("appending a uniform frame keeps a feasible problem feasible") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Tensor lp = RandomLogProbs(3, 3, 40 + seed);
    const std::vector<int> target = {1, 2};
    const float before = CtcLoss(lp, target).Item();
    REQUIRE(std::isfinite(before));
    std::vector<float> extended(lp.Data().begin(), lp.Data().end());
    for (int i = 0; i < 3; ++i) extended.push_back(std::log(1.0f / 3.0f));
    const float after = CtcLoss(Tensor({4, 3}, extended), target).Item();
    CHECK(std::isfinite(after));
  }
}

TEST_CASE("empty target scores the all-blank path") {
  Tensor lp = RandomLogProbs(3, 3, 77);
  double expect = 0.0;
  for (int t = 0; t < 3; ++t) expect -= lp.Data()[t * 3 + 0];
  CHECK(CtcLoss(lp, {}).Item() == doctest::Approx(expect).epsilon(1e-6));
}
