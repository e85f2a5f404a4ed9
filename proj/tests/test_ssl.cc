// tests/test_ssl.cc

#include <cmath>
#include <map>

#include "clsw/ssl.h"
#include "doctest.h"
#include "testutil.h"

using namespace clsw;
using test::RandomTensor;

namespace {

ModelConfig TinySslConfig() {
  ModelConfig c = ModelConfig::Desk();
  c.conv_spec = {{8, 4, 2}, {8, 3, 2}};
  c.model_dim = 8;
  c.num_blocks = 1;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.dropout = 0.0f;
  c.num_codebooks = 2;
  c.entries_per_book = 4;
  c.pos_conv_kernel = 3;
  c.mask_prob = 0.2f;
  c.mask_span = 2;
  return c;
}

UtteranceAudio Tone(const std::string& id, const std::string& lang, double freq,
                    int64_t n, uint64_t seed) {
  UtteranceAudio u;
  u.id = id;
  u.language = lang;
  u.samples.resize(n);
  Rng rng(seed);
  for (int64_t i = 0; i < n; ++i)
    u.samples[i] = static_cast<float>(0.4 * std::sin(2.0 * M_PI * freq * i / 16000.0) +
                                      0.05 * rng.Normal());
  return u;
}

}  // namespace

TEST_CASE("two masked frames with K=1: each frame's distractor is the other") {
  Rng rng(1);
  CandidateSets c = SampleDistractors({3, 9}, 1, &rng);
  REQUIRE(c.frames.size() == 2);
  CHECK(c.frames[0][0] == 3);
  CHECK(c.frames[0][1] == 9);
  CHECK(c.frames[1][0] == 9);
  CHECK(c.frames[1][1] == 3);
}

TEST_CASE("K larger than available distractors is reduced with a warning") {
  Rng rng(2);
  CandidateSets c = SampleDistractors({0, 1, 2}, 10, &rng);
  CHECK(c.k_used == 2);
  for (const auto& set : c.frames) CHECK(set.size() == 3);
}

TEST_CASE("distractor draws are uniform over the other masked frames") {
  // Over 10000 draws each other-frame should appear with frequency
  // 1/(M-1) within 3 sigma.
  const std::vector<int64_t> masked = {0, 1, 2, 3, 4, 5, 6, 7};  // M = 8
  const int m = 8;
  Rng rng(42);
  std::map<int64_t, int> counts;
  int total = 0;
  for (int rep = 0; rep < 10000 / (m - 1); ++rep) {
    CandidateSets c = SampleDistractors(masked, m - 1, &rng);
    for (int64_t cand : c.frames[0]) {
      if (cand == 0) continue;  // skip the true frame
      counts[cand]++;
      ++total;
    }
  }
  const double p = 1.0 / (m - 1);
  const double sigma = std::sqrt(p * (1 - p) / total);
  for (int64_t f = 1; f < m; ++f) {
    const double freq = static_cast<double>(counts[f]) / total;
    CHECK(std::abs(freq - p) < 3 * sigma + 1e-9);
  }
}

TEST_CASE("contrastive loss closed forms") {
  // All K+1=4 candidates equally similar -> ln 4.
  Tensor q({4, 3}, {1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0});
  Tensor c({4, 3}, {0.5, 0.5, 0, 0.5, 0.5, 0, 0.5, 0.5, 0, 0.5, 0.5, 0});
  CandidateSets sets;
  sets.k_used = 3;
  sets.frames = {{0, 1, 2, 3}};
  const float lm = ContrastiveLossSum(c, q, sets, 0.5f).Item();
  CHECK(lm == doctest::Approx(std::log(4.0)).epsilon(1e-6));

  // True candidate sim 1, one distractor sim 0, kappa=0.1 -> ln(1 + e^-10).
  Tensor q2({2, 2}, {1, 0, 0, 1});
  Tensor c2({2, 2}, {1, 0, 1, 0});
  CandidateSets sets2;
  sets2.k_used = 1;
  sets2.frames = {{0, 1}};
  const float lm2 = ContrastiveLossSum(c2, q2, sets2, 0.1f).Item();
  CHECK(lm2 == doctest::Approx(std::log(1.0 + std::exp(-10.0))).epsilon(1e-3));

  // K=0: singleton candidate set gives exactly zero loss.
  CandidateSets sets3;
  sets3.k_used = 0;
  sets3.frames = {{0}, {1}};
  CHECK(ContrastiveLossSum(c2, q2, sets3, 0.1f).Item() == doctest::Approx(0.0));
}

TEST_CASE("contrastive loss matches an explicit-loop recomputation on a 3-frame toy") {
  Rng rng(7);
  Tensor q = RandomTensor({3, 5}, &rng);
  Tensor c = RandomTensor({3, 5}, &rng);
  CandidateSets sets;
  sets.k_used = 2;
  sets.frames = {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}};
  const float kappa = 0.25f;
  const float got = ContrastiveLossSum(c, q, sets, kappa).Item();

  auto cosine = [&](const Tensor& a, int64_t ra, const Tensor& b, int64_t rb) {
    double dot = 0, na = 0, nb = 0;
    for (int64_t i = 0; i < 5; ++i) {
      const double av = a.At({ra, i}), bv = b.At({rb, i});
      dot += av * bv;
      na += av * av;
      nb += bv * bv;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  double expect = 0.0;
  for (const auto& set : sets.frames) {
    const int64_t t = set[0];
    double denom = 0.0;
    for (int64_t cand : set) denom += std::exp(cosine(q, cand, c, t) / kappa);
    expect += -std::log(std::exp(cosine(q, t, c, t) / kappa) / denom);
  }
  CHECK(got == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("diversity loss closed forms (paper formula)") {
  // One-hot usage maximizes the paper's L_d at exactly 0.
  Tensor onehot({2, 4}, {1, 0, 0, 0, 0, 0, 1, 0});
  CHECK(DiversityLoss(onehot, DiversityForm::kPaper).Item() == 0.0f);

  // Uniform with G=1, V=4: ln(1/4)/4.
  Tensor uni({1, 4}, {0.25, 0.25, 0.25, 0.25});
  CHECK(DiversityLoss(uni, DiversityForm::kPaper).Item() ==
        doctest::Approx(std::log(0.25) / 4.0).epsilon(1e-6));

  // Uniform at the full-scale shape G=2, V=320: -ln(320)/320.
  Tensor uni320({2, 320}, std::vector<float>(640, 1.0f / 320.0f));
  CHECK(DiversityLoss(uni320, DiversityForm::kPaper).Item() ==
        doctest::Approx(-std::log(320.0) / 320.0).epsilon(1e-5));

  // Bad rows rejected.
  Tensor bad({1, 2}, {0.9f, 0.3f});
  CHECK_THROWS_AS(DiversityLoss(bad, DiversityForm::kPaper), Error);
}

TEST_CASE("diversity loss stays in [-ln(V)/V, 0] and hits bounds at the extremes") {
  Rng rng(3);
  const int v = 8;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> p(2 * v);
    for (int g = 0; g < 2; ++g) {
      double sum = 0;
      for (int i = 0; i < v; ++i) {
        p[g * v + i] = static_cast<float>(rng.Uniform());
        sum += p[g * v + i];
      }
      for (int i = 0; i < v; ++i) p[g * v + i] = static_cast<float>(p[g * v + i] / sum);
    }
    const float ld = DiversityLoss(Tensor({2, v}, p), DiversityForm::kPaper).Item();
    CHECK(ld <= 1e-7f);
    CHECK(ld >= -std::log(static_cast<float>(v)) / v - 1e-6f);
  }
  // Reference (perplexity) form: 0 at uniform, (GV-G)/GV at one-hot.
  Tensor uni({2, 4}, std::vector<float>(8, 0.25f));
  CHECK(DiversityLoss(uni, DiversityForm::kReference).Item() ==
        doctest::Approx(0.0).epsilon(1e-5));
  Tensor onehot({2, 4}, {1, 0, 0, 0, 0, 0, 1, 0});
  CHECK(DiversityLoss(onehot, DiversityForm::kReference).Item() ==
        doctest::Approx((8.0 - 2.0) / 8.0).epsilon(1e-5));
}

TEST_CASE("total loss is the exact weighted sum") {
  Tensor lm = Tensor::Scalar(1.0f);
  Tensor ld = Tensor::Scalar(-0.018f);
  CHECK(TotalLoss(lm, ld, 0.1f).Item() == doctest::Approx(0.9982f).epsilon(1e-6));
  CHECK(TotalLoss(lm, ld, 0.0f).Item() == doctest::Approx(1.0f));
}

TEST_CASE("full pretraining loss gradients match finite differences (fixed noise)") {
  // 2-frame toy with d=8, G=2, V=4. The quantizer runs in soft mode so the
  // loss is an actual differentiable function; the straight-through hard path
  // has its own nonzero-gradient check in the model suite.
  ModelConfig mcfg = TinySslConfig();
  mcfg.num_blocks = 1;
  Model model(mcfg, 99);
  PretrainConfig pcfg;
  pcfg.distractors = 1;
  pcfg.kappa = 0.2f;
  pcfg.alpha = 0.1f;

  std::vector<float> wave = Tone("w", "x", 250.0, 40, 5).samples;  // latent length ~ 9

  auto loss_with = [&](ParamBinder& pb) {
    Rng rng(777);  // fixed noise per evaluation
    Tensor z = model.EncodeFeatures(pb, wave, false, nullptr);
    MaskSpec mask;
    mask.t_latent = z.Dim(0);
    mask.masked = {1, 3};  // fixed 2-frame mask
    QuantizeResult quant = model.Quantize(pb, z, 0.8f, &rng, /*hard=*/false);
    Tensor zm = model.ApplyTimeMask(pb, z, mask);
    Tensor c = model.Contextualize(pb, zm, false, nullptr);
    Rng cand_rng(11);
    CandidateSets cands = SampleDistractors(mask.masked, pcfg.distractors, &cand_rng);
    Tensor l_m = Scale(ContrastiveLossSum(c, quant.q, cands, pcfg.kappa), 0.5f);
    const int64_t gv = mcfg.num_codebooks * mcfg.entries_per_book;
    Tensor pbar = Reshape(
        Mean(EmbeddingLookup(Reshape(quant.probs, {z.Dim(0), gv}), mask.masked), 0),
        {mcfg.num_codebooks, mcfg.entries_per_book});
    return TotalLoss(l_m, DiversityLoss(pbar, DiversityForm::kPaper), pcfg.alpha);
  };

  // Analytic gradients.
  Graph g;
  ParamBinder pb(&g, &model.params());
  model.params().ZeroGrads();
  g.Backward(loss_with(pb));

  // Central differences over a stride of elements of every trainable tensor.
  const double h = 1e-3;
  for (Param* p : model.params().All()) {
    for (int64_t e = 0; e < p->value.NumEl();
         e += std::max<int64_t>(1, p->value.NumEl() / 6)) {
      const float orig = p->value.Data()[e];
      auto eval = [&](double delta) {
        p->value.MutableData()[e] = static_cast<float>(orig + delta);
        ParamBinder pb2(nullptr, &model.params());
        return static_cast<double>(loss_with(pb2).Item());
      };
      const double numeric = (eval(h) - eval(-h)) / (2 * h);
      p->value.MutableData()[e] = orig;
      const double analytic = p->grad[e];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      INFO("param ", p->name, " elem ", e);
      CHECK(std::abs(numeric - analytic) / denom < 1e-3);
    }
  }
}

TEST_CASE("pretraining on a toy corpus drives the loss down by 20 percent") {
  ModelConfig mcfg = TinySslConfig();
  Model model(mcfg, 1234);
  AdamState opt;
  opt.peak_lr = 2e-3f;
  opt.warmup_steps = 20;
  opt.total_steps = 400;

  PretrainConfig pcfg;
  pcfg.distractors = 5;
  pcfg.batch_size = 4;
  pcfg.crop_limit = 1600;

  // 30 synthetic utterances over three "languages".
  std::vector<UtteranceAudio> corpus;
  for (int i = 0; i < 30; ++i) {
    const double freq = 150.0 + 40.0 * (i % 3) + 7.0 * (i / 3);
    corpus.push_back(Tone(StrCat("utt", i), StrCat("lang", i % 3), freq, 2400, 100 + i));
  }

  std::vector<float> losses;
  Rng batch_rng(55);
  for (int step = 0; step < 200; ++step) {
    std::vector<const UtteranceAudio*> batch;
    for (int b = 0; b < pcfg.batch_size; ++b)
      batch.push_back(&corpus[batch_rng.UniformInt(corpus.size())]);
    PretrainStepStats stats = PretrainStep(&model, &opt, batch, pcfg, step, 9);
    // Eq. 2 identity holds at every logged step.
    CHECK(stats.loss.l ==
          doctest::Approx(stats.loss.l_m + pcfg.alpha * stats.loss.l_d).epsilon(1e-6));
    losses.push_back(stats.loss.l);
  }
  auto smoothed = [&](int center) {
    double s = 0.0;
    int n = 0;
    for (int i = std::max(0, center - 5); i < std::min<int>(losses.size(), center + 5);
         ++i) {
      s += losses[i];
      ++n;
    }
    return s / n;
  };
  const double baseline = smoothed(10);
  const double final_loss = smoothed(static_cast<int>(losses.size()) - 5);
  INFO("baseline ", baseline, " final ", final_loss);
  CHECK(final_loss <= 0.8 * baseline);
}

TEST_CASE("lr=0 freezes training: identical loss across repeated batches") {
  ModelConfig mcfg = TinySslConfig();
  Model model(mcfg, 5);
  AdamState opt;
  opt.peak_lr = 0.0f;
  opt.warmup_steps = 1;
  opt.total_steps = 100;
  PretrainConfig pcfg;
  pcfg.distractors = 3;

  UtteranceAudio utt = Tone("u0", "a", 200.0, 1200, 3);
  std::vector<const UtteranceAudio*> batch = {&utt};
  PretrainStepStats s1 = PretrainStep(&model, &opt, batch, pcfg, 7, 13);
  PretrainStepStats s2 = PretrainStep(&model, &opt, batch, pcfg, 7, 13);
  CHECK(s1.loss.l == s2.loss.l);
  CHECK(s1.loss.l_m == s2.loss.l_m);
  CHECK(s1.loss.l_d == s2.loss.l_d);
}

TEST_CASE("per-language validation losses aggregate consistently") {
  ModelConfig mcfg = TinySslConfig();
  Model model(mcfg, 77);
  PretrainConfig pcfg;
  pcfg.distractors = 3;

  std::vector<UtteranceAudio> single = {Tone("a0", "only", 200, 1500, 1),
                                        Tone("a1", "only", 230, 1500, 2)};
  auto rows = PerLanguageValidLoss(model, single, pcfg, 0, 21);
  REQUIRE(rows.size() == 2);  // language + overall
  CHECK(rows[0].language == "only");
  CHECK(rows[1].language == "overall");
  CHECK(rows[0].l == doctest::Approx(rows[1].l).epsilon(1e-9));

  // Two languages sharing identical utterances produce identical rows.
  std::vector<UtteranceAudio> twin;
  for (int i = 0; i < 3; ++i) {
    UtteranceAudio u = Tone(StrCat("t", i), "la", 180 + 20 * i, 1500, 10 + i);
    UtteranceAudio v = u;
    v.language = "lb";
    twin.push_back(u);
    twin.push_back(v);
  }
  rows = PerLanguageValidLoss(model, twin, pcfg, 0, 21);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].l_m == doctest::Approx(rows[1].l_m).epsilon(1e-9));
  CHECK(rows[0].l_d == doctest::Approx(rows[1].l_d).epsilon(1e-9));

  // Frame-weighted average of per-language rows equals the pooled row.
  std::vector<UtteranceAudio> mixed = {Tone("m0", "x", 160, 1200, 4),
                                       Tone("m1", "y", 260, 2400, 5),
                                       Tone("m2", "y", 220, 1800, 6)};
  rows = PerLanguageValidLoss(model, mixed, pcfg, 0, 33);
  REQUIRE(rows.size() == 3);
  double weighted = 0.0;
  int64_t frames = 0;
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    weighted += rows[i].l * rows[i].masked_frames;
    frames += rows[i].masked_frames;
  }
  CHECK(weighted / frames == doctest::Approx(rows.back().l).epsilon(1e-5));
}

TEST_CASE("cropping bounds the masked frame count") {
  ModelConfig mcfg = TinySslConfig();
  Model model(mcfg, 8);
  AdamState opt;
  opt.peak_lr = 0.0f;
  opt.warmup_steps = 1;
  opt.total_steps = 10;
  PretrainConfig pcfg;
  pcfg.crop_limit = 512;
  pcfg.distractors = 2;
  UtteranceAudio utt = Tone("long", "a", 210, 8000, 9);
  std::vector<const UtteranceAudio*> batch = {&utt};
  PretrainStepStats stats = PretrainStep(&model, &opt, batch, pcfg, 0, 2);
  CHECK(stats.loss.num_masked_frames <= mcfg.LatentLength(512));
}
