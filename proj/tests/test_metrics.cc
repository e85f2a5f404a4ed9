// tests/test_metrics.cc

#include "clsw/common.h"
#include "clsw/metrics.h"
#include "doctest.h"

using namespace clsw;

TEST_CASE("wer on simple substitutions and identity") {
  CHECK(Wer("a b c", "a x c") == doctest::Approx(1.0 / 3.0));
  CHECK(Wer("a b c", "a b c") == 0.0);
  CHECK(Wer("hello world", "world hello") == doctest::Approx(1.0));  // sub + sub
  CHECK(Wer("one", "") == doctest::Approx(1.0));
  CHECK_THROWS_AS(Wer("", "anything"), DataError);
}

TEST_CASE("cer counts codepoints excluding spaces") {
  CHECK(Cer("abc", "ab") == doctest::Approx(1.0 / 3.0));  // one deletion
  CHECK(Cer("a b c", "abc") == 0.0);                      // spaces excluded
  CHECK(Cer("abc", "xbc") == doctest::Approx(1.0 / 3.0));
  // Multi-byte characters count as single symbols.
  CHECK(Cer("क्या", "कया") == doctest::Approx(1.0 / 4.0));  // 4 codepoints, 1 deletion
  CHECK_THROWS_AS(Cer("   ", "x"), DataError);
}

TEST_CASE("edit distance is a metric on token sequences") {
  Rng rng(11);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  auto random_seq = [&](int max_len) {
    std::vector<std::string> s;
    const int len = static_cast<int>(rng.UniformInt(max_len + 1));
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng.UniformInt(3)]);
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_seq(6), y = random_seq(6), z = random_seq(6);
    // Symmetry.
    CHECK(EditDistance(x, y) == EditDistance(y, x));
    // Identity of indiscernibles.
    CHECK(EditDistance(x, x) == 0);
    // Triangle inequality.
    CHECK(EditDistance(x, z) <= EditDistance(x, y) + EditDistance(y, z));
  }
}

TEST_CASE("twenty fixed pairs match hand-computed DP tables") {
  struct Case {
    const char* ref;
    const char* hyp;
    double wer;
    double cer;
  };
  // CER treats spaces as absent, so character counts exclude them.
  const Case cases[] = {
      {"a b c", "a x c", 1.0 / 3, 1.0 / 3},
      {"a b c", "a b c", 0.0, 0.0},
      {"a b c d", "a b c", 1.0 / 4, 1.0 / 4},
      {"a b", "a b c", 1.0 / 2, 1.0 / 2},
      {"cat", "bat", 1.0, 1.0 / 3},
      {"kitten", "sitting", 1.0, 3.0 / 6},
      {"flaw", "lawn", 1.0, 2.0 / 4},
      {"hello world", "hello", 1.0 / 2, 5.0 / 10},
      {"x", "x", 0.0, 0.0},
      {"x", "y", 1.0, 1.0},
      {"a a a", "a", 2.0 / 3, 2.0 / 3},
      {"a", "a a a", 2.0, 2.0},
      {"the quick fox", "the quick fox", 0.0, 0.0},
      {"the quick fox", "the slow fox", 1.0 / 3, 5.0 / 11},
      {"abc def", "abcdef", 1.0, 0.0},
      {"ab", "ba", 1.0, 1.0},
      {"aaa bbb", "aaa", 1.0 / 2, 3.0 / 6},
      {"one two three", "one three two", 2.0 / 3, 6.0 / 11},
      {"sunday", "saturday", 1.0, 3.0 / 6},
      {"mm nn", "mm nn oo", 1.0 / 2, 2.0 / 4},
  };
  for (const Case& c : cases) {
    CAPTURE(c.ref);
    CAPTURE(c.hyp);
    CHECK(Wer(c.ref, c.hyp) == doctest::Approx(c.wer).epsilon(1e-12));
    CHECK(Cer(c.ref, c.hyp) == doctest::Approx(c.cer).epsilon(1e-12));
  }
}
