// tests/test_ngram.cc

#include <cmath>
#include <filesystem>

#include "clsw/ngram.h"
#include "doctest.h"

using namespace clsw;

TEST_CASE("hand-computed bigram with absolute discounting") {
  // Corpus "a b a b", d = 0.75:
  //   c(a) as context = 2, c(ab) = 2, N1+(a) = 1
  //   P(b|a) = (2 - 0.75)/2 + (0.75 * 1/2) * P(b) = 0.625 + 0.375 * 0.5 = 0.8125
  NGramModel m = NGramModel::Train({"a b a b"}, 2, 0.75);
  const std::vector<std::string> ctx = {"a"};
  CHECK(std::exp(m.ScoreWord(ctx, "b")) == doctest::Approx(0.8125).epsilon(1e-9));
  // Unigram backoff is the token MLE.
  CHECK(std::exp(m.ScoreWord({}, "b")) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("unseen context backs off purely to the unigram") {
  NGramModel m = NGramModel::Train({"a b", "b c"}, 3, 0.75);
  const std::vector<std::string> unseen = {"zzz", "qqq"};
  CHECK(m.ScoreWord(unseen, "a") == doctest::Approx(m.ScoreWord({}, "a")).epsilon(1e-12));
}

TEST_CASE("conditional mass sums to 1 for every observed context") {
  // 100-line toy corpus with a small vocabulary.
  std::vector<std::string> lines;
  Rng rng(42);
  const std::vector<std::string> vocab = {"red", "green", "blue", "dog", "cat", "runs"};
  for (int i = 0; i < 100; ++i) {
    std::string line;
    const int len = 3 + static_cast<int>(rng.UniformInt(6));
    for (int w = 0; w < len; ++w) {
      if (w) line += " ";
      line += vocab[rng.UniformInt(vocab.size())];
    }
    lines.push_back(line);
  }
  NGramModel m = NGramModel::Train(lines, 3, 0.75);

  // Every context observed in the corpus, orders 0..2.
  std::vector<std::vector<std::string>> contexts = {{}};
  for (const std::string& w1 : vocab) {
    contexts.push_back({w1});
    for (const std::string& w2 : vocab) contexts.push_back({w1, w2});
  }
  for (const auto& ctx : contexts) {
    double total = 0.0;
    for (const std::string& w : m.VocabWords()) total += std::exp(m.ScoreWord(ctx, w));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_AS(NGramModel::Train({}, 2, 0.75), DataError);
  CHECK_THROWS_AS(NGramModel::Train({"", "  "}, 2, 0.75), DataError);
}

TEST_CASE("sequence scores are monotone and satisfy the chain rule") {
  NGramModel m = NGramModel::Train({"the dog runs", "the cat runs", "a dog sits"}, 3);
  std::vector<std::string> words = {"the", "dog", "runs"};
  // Monotone decrease as words are appended.
  double prev = 0.0;
  std::vector<std::string> prefix;
  for (const std::string& w : words) {
    prefix.push_back(w);
    const double s = m.ScoreSequence(prefix);
    CHECK(s <= prev + 1e-12);
    prev = s;
  }
  // Chain rule: total equals the sum of per-step conditionals.
  double stepwise = 0.0;
  std::vector<std::string> ctx(static_cast<size_t>(m.order() - 1), "<s>");
  for (const std::string& w : words) {
    stepwise += m.ScoreWord(ctx, w);
    ctx.push_back(w);
  }
  stepwise += m.unk_logprob();  // end term
  CHECK(m.ScoreSequence(words) == doctest::Approx(stepwise).epsilon(1e-9));
  // Empty sequence scores only the end term.
  CHECK(m.ScoreSequence({}) == doctest::Approx(m.unk_logprob()).epsilon(1e-12));
}

TEST_CASE("unknown words get the unknown floor") {
  NGramModel m = NGramModel::Train({"a b c"}, 2);
  CHECK(m.ScoreWord({}, "zzz") == doctest::Approx(m.unk_logprob()));
  CHECK(!m.Known("zzz"));
  CHECK(m.Known("a"));
}

TEST_CASE("ARPA-style save/load round trip preserves scores") {
  std::vector<std::string> lines = {"a b a b", "b c a", "c c b a"};
  NGramModel m = NGramModel::Train(lines, 3, 0.75);
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "clsw_test_lm.arpa").string();
  m.Save(path);
  NGramModel loaded = NGramModel::Load(path);
  CHECK(loaded.order() == m.order());
  CHECK(loaded.VocabSize() == m.VocabSize());
  const std::vector<std::vector<std::string>> ctxs = {{}, {"a"}, {"b", "a"}, {"zz"}};
  for (const auto& ctx : ctxs)
    for (const std::string& w : {"a", "b", "c"})
      CHECK(loaded.ScoreWord(ctx, w) == doctest::Approx(m.ScoreWord(ctx, w)).epsilon(1e-8));
  fs::remove(path);
}

TEST_CASE("five-gram order is exercised end to end") {
  std::vector<std::string> lines;
  for (int i = 0; i < 20; ++i) lines.push_back("one two three four five six");
  NGramModel m = NGramModel::Train(lines, 5, 0.75);
  const std::vector<std::string> ctx = {"two", "three", "four", "five"};
  // A context seen 20 times predicts its continuation with high probability.
  CHECK(std::exp(m.ScoreWord(ctx, "six")) > 0.9);
}
