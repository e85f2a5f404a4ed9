// tests/test_tensor.cc

#include <cmath>
#include <limits>

#include "clsw/tensor.h"
#include "doctest.h"
#include "testutil.h"

using namespace clsw;
using test::MaxGradError;
using test::RandomTensor;
using test::WeightedSum;

TEST_CASE("matmul identity leaves any 3x3 matrix unchanged") {
  Rng rng(7);
  Tensor a = RandomTensor({3, 3}, &rng);
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor out = Matmul(eye, a);
  for (int64_t i = 0; i < 9; ++i) CHECK(out.Data()[i] == doctest::Approx(a.Data()[i]));
}

TEST_CASE("conv1d matches a hand convolution") {
  // signal [1,2,3], kernel [1,1], stride 1, no pad -> [3, 5]
  Tensor x({3, 1}, {1, 2, 3});
  Tensor w({1, 1, 2}, {1, 1});
  Tensor out = Conv1d(x, w, Tensor(), 1, 0);
  REQUIRE(out.Dims() == Shape{2, 1});
  CHECK(out.Data()[0] == doctest::Approx(3.0f));
  CHECK(out.Data()[1] == doctest::Approx(5.0f));
}

TEST_CASE("cosine similarity of a vector with itself is 1") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor v = RandomTensor({1, 6}, &rng, 2.0f);
    CHECK(CosineSimilarity(v, v).Item() == doctest::Approx(1.0f).epsilon(1e-5));
  }
}

TEST_CASE("backward of sum(x^2) yields 2x") {
  Graph g;
  Tensor x({2}, {1, 2});
  std::vector<float> grad(2, 0.0f);
  Tensor xl = g.Leaf(x, &grad);
  g.Backward(Sum(Mul(xl, xl)));
  CHECK(grad[0] == doctest::Approx(2.0f));
  CHECK(grad[1] == doctest::Approx(4.0f));
}

TEST_CASE("gradients accumulate additively across uses of a leaf") {
  Graph g;
  Tensor x({1}, {3.0f});
  std::vector<float> grad(1, 0.0f);
  Tensor xl = g.Leaf(x, &grad);
  g.Backward(Sum(Add(xl, xl)));
  CHECK(grad[0] == doctest::Approx(2.0f));
}

TEST_CASE("backward errors: non-scalar loss and consumed tape") {
  Graph g;
  Tensor x({2}, {1, 2});
  std::vector<float> grad(2, 0.0f);
  Tensor xl = g.Leaf(x, &grad);
  CHECK_THROWS_AS(g.Backward(xl), Error);
  Tensor loss = Sum(xl);
  g.Backward(loss);
  CHECK_THROWS_WITH_AS(g.Backward(loss), doctest::Contains("consumed"), Error);
}

TEST_CASE("shape mismatch errors name the op and shapes") {
  Tensor a({2, 3}, std::vector<float>(6, 1.0f));
  Tensor b({2, 3}, std::vector<float>(6, 1.0f));
  CHECK_THROWS_WITH_AS(Matmul(a, b), doctest::Contains("matmul"), Error);
  CHECK_THROWS_WITH_AS(Matmul(a, b), doctest::Contains("[2,3]"), Error);
}

TEST_CASE("check_numerics flags NaN outputs with the op name") {
  Graph g;
  g.set_check_numerics(true);
  Tensor x({2}, {0.0f, -1.0f});
  std::vector<float> grad(2, 0.0f);
  Tensor xl = g.Leaf(x, &grad);
  Tensor bad({2}, {std::numeric_limits<float>::quiet_NaN(), 1.0f});
  CHECK_THROWS_AS(Add(xl, bad), NumericError);
}

TEST_CASE("softmax rows sum to 1 and exp(log_softmax) equals softmax") {
  Rng rng(11);
  Tensor x = RandomTensor({4, 7}, &rng, 3.0f);
  Tensor sm = Softmax(x, 1);
  Tensor lsm = LogSoftmax(x, 1);
  for (int64_t r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int64_t c = 0; c < 7; ++c) {
      const float s = sm.Data()[r * 7 + c];
      sum += s;
      CHECK(std::exp(lsm.Data()[r * 7 + c]) == doctest::Approx(s).epsilon(1e-6));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("softmax over a non-trailing axis normalizes that axis") {
  Rng rng(12);
  Tensor x = RandomTensor({3, 4, 2}, &rng, 2.0f);
  Tensor sm = Softmax(x, 1);
  for (int64_t o = 0; o < 3; ++o)
    for (int64_t in = 0; in < 2; ++in) {
      double sum = 0.0;
      for (int64_t i = 0; i < 4; ++i) sum += sm.Data()[o * 8 + i * 2 + in];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("dropout is the identity when disabled or p=0") {
  Rng rng(5);
  Tensor x = RandomTensor({3, 3}, &rng);
  Tensor off = Dropout(x, 0.5f, /*train=*/false, &rng);
  Tensor p0 = Dropout(x, 0.0f, /*train=*/true, &rng);
  for (int64_t i = 0; i < 9; ++i) {
    CHECK(off.Data()[i] == x.Data()[i]);
    CHECK(p0.Data()[i] == x.Data()[i]);
  }
}

TEST_CASE("dropout keeps expectation and masks deterministically per seed") {
  Tensor x = Tensor::Full({1000}, 1.0f);
  Rng r1(42), r2(42);
  Tensor a = Dropout(x, 0.3f, true, &r1);
  Tensor b = Dropout(x, 0.3f, true, &r2);
  int kept = 0;
  for (int64_t i = 0; i < 1000; ++i) {
    CHECK(a.Data()[i] == b.Data()[i]);  // bit-identical under the same seed
    if (a.Data()[i] != 0.0f) {
      CHECK(a.Data()[i] == doctest::Approx(1.0f / 0.7f));
      ++kept;
    }
  }
  CHECK(kept > 600);
  CHECK(kept < 800);
}

TEST_CASE("same seed gives bit-identical forward and backward") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor x = RandomTensor({4, 6}, &rng);
    Graph g;
    std::vector<float> grad(x.NumEl(), 0.0f);
    Tensor xl = g.Leaf(x, &grad);
    Rng drop_rng(seed + 1);
    Tensor y = Dropout(Gelu(Matmul(xl, Transpose(xl))), 0.2f, true, &drop_rng);
    Tensor loss = Sum(y);
    float lv = loss.Item();
    g.Backward(loss);
    return std::make_pair(lv, grad);
  };
  auto [l1, g1] = run(123);
  auto [l2, g2] = run(123);
  CHECK(l1 == l2);
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("embedding lookup gathers rows and scatter-adds gradients") {
  Tensor table({3, 2}, {0, 1, 10, 11, 20, 21});
  Tensor out = EmbeddingLookup(table, {2, 0, 2});
  CHECK(out.At({0, 0}) == 20.0f);
  CHECK(out.At({1, 1}) == 1.0f);

  Graph g;
  std::vector<float> grad(6, 0.0f);
  Tensor tl = g.Leaf(table, &grad);
  g.Backward(Sum(EmbeddingLookup(tl, {2, 0, 2})));
  CHECK(grad[0] == doctest::Approx(1.0f));
  CHECK(grad[4] == doctest::Approx(2.0f));  // row 2 used twice
}

TEST_CASE("slice and concat round-trip") {
  Rng rng(3);
  Tensor x = RandomTensor({4, 6}, &rng);
  Tensor left = Slice(x, 1, 0, 2);
  Tensor right = Slice(x, 1, 2, 4);
  Tensor back = Concat({left, right}, 1);
  for (int64_t i = 0; i < x.NumEl(); ++i) CHECK(back.Data()[i] == x.Data()[i]);
  CHECK_THROWS_AS(Slice(x, 1, 5, 3), Error);
}

// Every primitive with requires-grad inputs matches central finite
// differences within 1e-3 relative error on random small shapes, >= 20
// seeded trials across the op set.
TEST_CASE("finite differences validate every primitive's gradient") {
  for (uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(1000 + trial);

    Tensor a = RandomTensor({3, 4}, &rng);
    Tensor b = RandomTensor({4, 2}, &rng);
    CHECK(MaxGradError({a, b}, [&](std::vector<Tensor>& in) {
            return WeightedSum(Matmul(in[0], in[1]), trial);
          }) < 1e-3);

    // conv1d with stride 2 and pad 1
    Tensor x = RandomTensor({8, 3}, &rng);
    Tensor w = RandomTensor({4, 3, 3}, &rng);
    Tensor bias = RandomTensor({4}, &rng);
    CHECK(MaxGradError({x, w, bias}, [&](std::vector<Tensor>& in) {
            return WeightedSum(Conv1d(in[0], in[1], in[2], 2, 1), trial);
          }) < 1e-3);

    // add/sub with row and scalar broadcast, mul, scale
    Tensor row = RandomTensor({3}, &rng);
    Tensor scalar = RandomTensor({1}, &rng);
    Tensor y = RandomTensor({4, 3}, &rng);
    CHECK(MaxGradError({x, y, row, scalar}, [&](std::vector<Tensor>& in) {
            Tensor t = Add(in[1], in[2]);
            t = Sub(t, in[3]);
            t = Mul(t, in[1]);
            return WeightedSum(Scale(t, 0.7f), trial);
          }) < 1e-3);

    // transpose, gelu, log
    CHECK(MaxGradError({y}, [&](std::vector<Tensor>& in) {
            Tensor t = Gelu(Transpose(in[0]));
            return WeightedSum(Log(AddScalar(Mul(t, t), 0.5f)), trial);
          }) < 1e-3);

    // layer_norm / group_norm
    Tensor gain = RandomTensor({6}, &rng, 0.5f);
    Tensor lnb = RandomTensor({6}, &rng, 0.5f);
    Tensor z = RandomTensor({4, 6}, &rng, 2.0f);
    CHECK(MaxGradError({z, gain, lnb}, [&](std::vector<Tensor>& in) {
            return WeightedSum(LayerNorm(in[0], in[1], in[2]), trial);
          }) < 1e-3);
    CHECK(MaxGradError({z, gain, lnb}, [&](std::vector<Tensor>& in) {
            return WeightedSum(GroupNorm(in[0], 3, in[1], in[2]), trial);
          }) < 1e-3);

    // softmax / log_softmax over both axes
    CHECK(MaxGradError({z}, [&](std::vector<Tensor>& in) {
            return WeightedSum(Softmax(in[0], 1), trial);
          }) < 1e-3);
    CHECK(MaxGradError({z}, [&](std::vector<Tensor>& in) {
            return WeightedSum(LogSoftmax(in[0], 0), trial);
          }) < 1e-3);

    // dropout with a fixed per-eval RNG
    CHECK(MaxGradError({z}, [&](std::vector<Tensor>& in) {
            Rng drop_rng(trial * 17 + 5);
            return WeightedSum(Dropout(in[0], 0.25f, true, &drop_rng), trial);
          }) < 1e-3);

    // embedding_lookup + cosine similarity
    Tensor table = RandomTensor({5, 4}, &rng);
    Tensor q = RandomTensor({3, 4}, &rng);
    CHECK(MaxGradError({table, q}, [&](std::vector<Tensor>& in) {
            Tensor rows = EmbeddingLookup(in[0], {4, 0, 2});
            return WeightedSum(CosineSimilarity(rows, in[1]), trial);
          }) < 1e-3);

    // reductions, concat, slice, reshape
    Tensor u = RandomTensor({2, 3, 4}, &rng);
    CHECK(MaxGradError({u, y}, [&](std::vector<Tensor>& in) {
            Tensor s1 = Sum(in[0], 1);             // [2,4]
            Tensor m1 = Mean(in[0], 2);            // [2,3]
            Tensor c = Concat({Reshape(s1, {8}), Reshape(m1, {6})}, 0);
            Tensor sl = Slice(in[1], 0, 1, 2);
            return Add(WeightedSum(c, trial), Mean(Mul(sl, sl)));
          }) < 1e-3);
  }
}
