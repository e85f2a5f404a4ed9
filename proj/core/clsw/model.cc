// clsw/model.cc

// Copyright 2026  CLSW authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "clsw/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace clsw {

using nlohmann::json;

// ---- ModelConfig -----------------------------------------------------------

ModelConfig ModelConfig::Desk() {
  ModelConfig c;
  c.conv_spec = {{64, 10, 5}, {64, 3, 2}, {64, 3, 2}};
  c.model_dim = 64;
  c.num_blocks = 2;
  c.num_heads = 2;
  c.ffn_dim = 256;
  c.dropout = 0.1f;
  c.num_codebooks = 2;
  c.entries_per_book = 32;
  c.gumbel_decay = 0.995f;
  c.pos_conv_kernel = 9;
  return c;
}

ModelConfig ModelConfig::FullScale() {
  ModelConfig c;
  c.conv_spec = {{512, 10, 5}, {512, 3, 2}, {512, 3, 2}, {512, 3, 2},
                 {512, 3, 2},  {512, 2, 2}, {512, 2, 2}};
  c.model_dim = 768;
  c.num_blocks = 12;
  c.num_heads = 8;
  c.ffn_dim = 3072;
  c.dropout = 0.1f;
  c.num_codebooks = 2;
  c.entries_per_book = 320;
  c.gumbel_decay = 0.999995f;
  c.pos_conv_kernel = 129;
  return c;
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (conv_spec.empty()) fail("conv_spec must have at least one layer");
  for (const auto& l : conv_spec) {
    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1)
      fail("conv layers need positive channels/kernel/stride");
  }
  if (model_dim < 1) fail("model_dim must be positive");
  if (num_heads < 1 || model_dim % num_heads != 0)
    fail(StrCat("model_dim ", model_dim, " not divisible by num_heads ", num_heads));
  if (num_codebooks < 1 || model_dim % num_codebooks != 0)
    fail(StrCat("model_dim ", model_dim, " not divisible by num_codebooks ", num_codebooks));
  if (entries_per_book < 1) fail("entries_per_book must be positive");
  if (dropout < 0.0f || dropout >= 1.0f) fail("dropout must be in [0,1)");
  if (mask_prob < 0.0f || mask_prob > 1.0f) fail("mask_prob must be in [0,1]");
  if (mask_span < 1) fail("mask_span must be >= 1");
  if (gumbel_start <= 0.0f || gumbel_floor <= 0.0f || gumbel_decay <= 0.0f ||
      gumbel_decay > 1.0f)
    fail("gumbel schedule values out of range");
  if (pos_conv_kernel < 0 || (pos_conv_kernel > 0 && pos_conv_kernel % 2 == 0))
    fail("pos_conv_kernel must be 0 or odd");
  if (num_blocks < 0 || ffn_dim < 1) fail("bad transformer sizes");
}

int64_t ModelConfig::LatentLength(int64_t num_samples) const {
  int64_t t = num_samples;
  for (const auto& l : conv_spec) {
    if (t < l.kernel) return 0;
    t = (t - l.kernel) / l.stride + 1;
  }
  return t;
}

int64_t ModelConfig::MinInputSamples() const {
  int64_t t = 1;
  for (auto it = conv_spec.rbegin(); it != conv_spec.rend(); ++it)
    t = (t - 1) * it->stride + it->kernel;
  return t;
}

float GumbelTemperature(const ModelConfig& cfg, int64_t step) {
  const double tau = cfg.gumbel_start * std::pow(cfg.gumbel_decay, static_cast<double>(step));
  return std::max(cfg.gumbel_floor, static_cast<float>(tau));
}

std::string ModelConfigToJson(const ModelConfig& cfg) {
  json spec = json::array();
  for (const auto& l : cfg.conv_spec)
    spec.push_back(json::array({l.out_channels, l.kernel, l.stride}));
  json j{{"conv_spec", spec},
         {"model_dim", cfg.model_dim},
         {"num_blocks", cfg.num_blocks},
         {"num_heads", cfg.num_heads},
         {"ffn_dim", cfg.ffn_dim},
         {"dropout", cfg.dropout},
         {"num_codebooks", cfg.num_codebooks},
         {"entries_per_book", cfg.entries_per_book},
         {"gumbel_start", cfg.gumbel_start},
         {"gumbel_floor", cfg.gumbel_floor},
         {"gumbel_decay", cfg.gumbel_decay},
         {"mask_prob", cfg.mask_prob},
         {"mask_span", cfg.mask_span},
         {"pos_conv_kernel", cfg.pos_conv_kernel},
         {"conv_group_norm", cfg.conv_group_norm},
         {"learned_mask_embedding", cfg.learned_mask_embedding}};
  return j.dump();
}

ModelConfig ParseModelConfigJson(const json& j) {
  static const std::set<std::string> kKnown = {
      "conv_spec",       "model_dim",    "num_blocks",   "num_heads",
      "ffn_dim",         "dropout",      "num_codebooks", "entries_per_book",
      "gumbel_start",    "gumbel_floor", "gumbel_decay", "mask_prob",
      "mask_span",       "pos_conv_kernel", "conv_group_norm",
      "learned_mask_embedding"};
  std::vector<std::string> unknown;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnown.count(it.key())) unknown.push_back(it.key());
  if (!unknown.empty())
    throw ConfigError("model config: unknown keys: " + JoinStrings(unknown, ", "));

  ModelConfig c = ModelConfig::Desk();
  if (j.contains("conv_spec")) {
    c.conv_spec.clear();
    for (const auto& l : j.at("conv_spec"))
      c.conv_spec.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>()});
  }
  auto get = [&](const char* key, auto* dst) {
    if (j.contains(key)) *dst = j.at(key).get<std::decay_t<decltype(*dst)>>();
  };
  get("model_dim", &c.model_dim);
  get("num_blocks", &c.num_blocks);
  get("num_heads", &c.num_heads);
  get("ffn_dim", &c.ffn_dim);
  get("dropout", &c.dropout);
  get("num_codebooks", &c.num_codebooks);
  get("entries_per_book", &c.entries_per_book);
  get("gumbel_start", &c.gumbel_start);
  get("gumbel_floor", &c.gumbel_floor);
  get("gumbel_decay", &c.gumbel_decay);
  get("mask_prob", &c.mask_prob);
  get("mask_span", &c.mask_span);
  get("pos_conv_kernel", &c.pos_conv_kernel);
  get("conv_group_norm", &c.conv_group_norm);
  get("learned_mask_embedding", &c.learned_mask_embedding);
  c.Validate();
  return c;
}

ModelConfig ModelConfigFromJson(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(StrCat("model config: invalid JSON: ", e.what()));
  }
  // Accept either a bare model object or a wrapper with a "model" key.
  if (j.contains("model")) return ParseModelConfigJson(j.at("model"));
  return ParseModelConfigJson(j);
}

// ---- Masking ---------------------------------------------------------------

bool MaskSpec::IsMasked(int64_t t) const {
  return std::binary_search(masked.begin(), masked.end(), t);
}

MaskSpec MaskTimesteps(int64_t t_latent, float mask_prob, int mask_span, Rng* rng) {
  CLSW_CHECK(t_latent >= 1, "mask_timesteps: empty sequence");
  CLSW_CHECK(mask_prob >= 0.0f && mask_prob <= 1.0f, "mask_timesteps: bad mask_prob");
  CLSW_CHECK(mask_span >= 1, "mask_timesteps: bad mask_span");
  MaskSpec spec;
  spec.t_latent = t_latent;
  if (t_latent < mask_span) return spec;  // too short to place a span
  std::vector<char> m(t_latent, 0);
  for (int64_t t = 0; t < t_latent; ++t) {
    if (mask_prob >= 1.0f || rng->Uniform() < mask_prob) {
      const int64_t end = std::min<int64_t>(t + mask_span, t_latent);
      for (int64_t i = t; i < end; ++i) m[i] = 1;
    }
  }
  for (int64_t t = 0; t < t_latent; ++t)
    if (m[t]) spec.masked.push_back(t);
  return spec;
}

// ---- ParamBinder -----------------------------------------------------------

ParamBinder::ParamBinder(Graph* graph, ParamStore* store,
                         const std::set<std::string>* frozen_prefixes)
    : graph_(graph), store_(store), frozen_prefixes_(frozen_prefixes) {}

bool ParamBinder::IsFrozen(const std::string& name) const {
  if (!frozen_prefixes_) return false;
  for (const std::string& p : *frozen_prefixes_)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

Tensor ParamBinder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Param& p = store_->Get(name);
  Tensor t;
  if (graph_ == nullptr || IsFrozen(name)) {
    t = p.value.Detached();
  } else {
    t = graph_->Leaf(p.value, &p.grad);
  }
  bound_.emplace(name, t);
  return t;
}

// ---- Model -----------------------------------------------------------------

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  InitParams(seed);
}

namespace {

Tensor UniformInit(Shape shape, float limit, Rng* rng) {
  std::vector<float> v(NumElements(shape));
  for (float& x : v) x = static_cast<float>((rng->Uniform() * 2.0 - 1.0) * limit);
  return Tensor(std::move(shape), std::move(v));
}

Tensor NormalInit(Shape shape, float stddev, Rng* rng) {
  std::vector<float> v(NumElements(shape));
  for (float& x : v) x = static_cast<float>(rng->Normal() * stddev);
  return Tensor(std::move(shape), std::move(v));
}

Tensor LinearInit(int in_dim, int out_dim, Rng* rng) {
  const float limit = std::sqrt(6.0f / static_cast<float>(in_dim + out_dim));
  return UniformInit({in_dim, out_dim}, limit, rng);
}

}  // namespace

void Model::InitParams(uint64_t seed) {
  Rng rng(seed);
  const int d = cfg_.model_dim;
  int c_in = 1;
  for (size_t i = 0; i < cfg_.conv_spec.size(); ++i) {
    const auto& l = cfg_.conv_spec[i];
    const float limit = std::sqrt(6.0f / static_cast<float>(c_in * l.kernel));
    params_.Create(StrCat("conv", i, ".weight"),
                   UniformInit({l.out_channels, c_in, l.kernel}, limit, &rng));
    params_.Create(StrCat("conv", i, ".bias"), Tensor::Zeros({l.out_channels}));
    c_in = l.out_channels;
  }
  if (cfg_.conv_group_norm) {
    const int c0 = cfg_.conv_spec[0].out_channels;
    params_.Create("feature_norm.gain", Tensor::Full({c0}, 1.0f));
    params_.Create("feature_norm.bias", Tensor::Zeros({c0}));
  }
  params_.Create("post_proj.weight", LinearInit(c_in, d, &rng));
  params_.Create("post_proj.bias", Tensor::Zeros({d}));
  params_.Create("post_norm.gain", Tensor::Full({d}, 1.0f));
  params_.Create("post_norm.bias", Tensor::Zeros({d}));
  params_.Create("mask_emb", NormalInit({d}, 0.1f, &rng));
  if (cfg_.num_blocks > 0 && cfg_.pos_conv_kernel > 0) {
    const float limit = std::sqrt(6.0f / static_cast<float>(d * cfg_.pos_conv_kernel));
    params_.Create("pos_conv.weight", UniformInit({d, d, cfg_.pos_conv_kernel}, limit, &rng));
    params_.Create("pos_conv.bias", Tensor::Zeros({d}));
  }
  for (int b = 0; b < cfg_.num_blocks; ++b) {
    const std::string pre = StrCat("block", b, ".");
    params_.Create(pre + "ln1.gain", Tensor::Full({d}, 1.0f));
    params_.Create(pre + "ln1.bias", Tensor::Zeros({d}));
    for (const char* w : {"wq", "wk", "wv", "wo"})
      params_.Create(pre + "attn." + w, LinearInit(d, d, &rng));
    for (const char* bnames : {"bq", "bk", "bv", "bo"})
      params_.Create(pre + "attn." + bnames, Tensor::Zeros({d}));
    params_.Create(pre + "ln2.gain", Tensor::Full({d}, 1.0f));
    params_.Create(pre + "ln2.bias", Tensor::Zeros({d}));
    params_.Create(pre + "ffn.w1", LinearInit(d, cfg_.ffn_dim, &rng));
    params_.Create(pre + "ffn.b1", Tensor::Zeros({cfg_.ffn_dim}));
    params_.Create(pre + "ffn.w2", LinearInit(cfg_.ffn_dim, d, &rng));
    params_.Create(pre + "ffn.b2", Tensor::Zeros({d}));
  }
  if (cfg_.num_blocks > 0) {
    params_.Create("final_norm.gain", Tensor::Full({d}, 1.0f));
    params_.Create("final_norm.bias", Tensor::Zeros({d}));
  }
  const int gv = cfg_.num_codebooks * cfg_.entries_per_book;
  params_.Create("quantizer.logit_w", LinearInit(d, gv, &rng));
  params_.Create("quantizer.logit_b", Tensor::Zeros({gv}));
  for (int g = 0; g < cfg_.num_codebooks; ++g)
    params_.Create(StrCat("quantizer.codebook", g),
                   NormalInit({cfg_.entries_per_book, cfg_.EntryDim()}, 0.3f, &rng));
  params_.Create("quantizer.out_w", LinearInit(d, d, &rng));
  params_.Create("quantizer.out_b", Tensor::Zeros({d}));
}

std::set<std::string> Model::FeatureEncoderPrefixes() const {
  return {"conv", "feature_norm", "post_proj", "post_norm"};
}

Tensor Model::EncodeFeatures(ParamBinder& pb, std::span<const float> waveform, bool train,
                             Rng* rng) const {
  const int64_t min_len = cfg_.MinInputSamples();
  if (static_cast<int64_t>(waveform.size()) < min_len)
    throw DataError(StrCat("encode_features: waveform of ", waveform.size(),
                           " samples is shorter than the receptive field; need at least ",
                           min_len, " samples"));
  Tensor x({static_cast<int64_t>(waveform.size()), 1},
           std::vector<float>(waveform.begin(), waveform.end()));
  for (size_t i = 0; i < cfg_.conv_spec.size(); ++i) {
    const auto& l = cfg_.conv_spec[i];
    x = Conv1d(x, pb(StrCat("conv", i, ".weight")), pb(StrCat("conv", i, ".bias")),
               l.stride, 0);
    if (i == 0 && cfg_.conv_group_norm)
      x = GroupNorm(x, l.out_channels, pb("feature_norm.gain"), pb("feature_norm.bias"));
    x = Gelu(x);
  }
  x = Add(Matmul(x, pb("post_proj.weight")), pb("post_proj.bias"));
  x = LayerNorm(x, pb("post_norm.gain"), pb("post_norm.bias"));
  if (train && cfg_.dropout > 0.0f) x = Dropout(x, cfg_.dropout, train, rng);
  return x;
}

Tensor Model::ApplyTimeMask(ParamBinder& pb, const Tensor& z, const MaskSpec& mask) const {
  if (mask.masked.empty()) return z;
  const int64_t t = z.Dim(0), d = z.Dim(1);
  std::vector<float> keep(t * d, 1.0f);
  std::vector<float> sel(t, 0.0f);
  for (int64_t i : mask.masked) {
    sel[i] = 1.0f;
    std::fill(keep.begin() + i * d, keep.begin() + (i + 1) * d, 0.0f);
  }
  Tensor z_kept = Mul(z, Tensor({t, d}, std::move(keep)));
  Tensor emb = cfg_.learned_mask_embedding ? pb("mask_emb")
                                           : params_.Get("mask_emb").value.Detached();
  Tensor placed = Matmul(Tensor({t, 1}, std::move(sel)), Reshape(emb, {1, d}));
  return Add(z_kept, placed);
}

Tensor Model::Contextualize(ParamBinder& pb, const Tensor& z_in, bool train, Rng* rng) const {
  CheckShape(z_in.Rank() == 2 && z_in.Dim(1) == cfg_.model_dim, "contextualize",
             {z_in.Dims()}, StrCat("expected [t,", cfg_.model_dim, "]"));
  if (cfg_.num_blocks == 0) return z_in;  // identity stack
  const int d = cfg_.model_dim;
  const int heads = cfg_.num_heads;
  const int dh = d / heads;
  const float att_scale = 1.0f / std::sqrt(static_cast<float>(dh));
  const float p = cfg_.dropout;

  Tensor z = z_in;
  if (cfg_.pos_conv_kernel > 0) {
    Tensor pos = Gelu(Conv1d(z, pb("pos_conv.weight"), pb("pos_conv.bias"), 1,
                             cfg_.pos_conv_kernel / 2));
    z = Add(z, pos);
  }
  z = Dropout(z, p, train, rng);
  for (int b = 0; b < cfg_.num_blocks; ++b) {
    const std::string pre = StrCat("block", b, ".");
    Tensor h = LayerNorm(z, pb(pre + "ln1.gain"), pb(pre + "ln1.bias"));
    Tensor q = Add(Matmul(h, pb(pre + "attn.wq")), pb(pre + "attn.bq"));
    Tensor k = Add(Matmul(h, pb(pre + "attn.wk")), pb(pre + "attn.bk"));
    Tensor v = Add(Matmul(h, pb(pre + "attn.wv")), pb(pre + "attn.bv"));
    std::vector<Tensor> head_outs;
    head_outs.reserve(heads);
    for (int hd = 0; hd < heads; ++hd) {
      Tensor qh = Slice(q, 1, hd * dh, dh);
      Tensor kh = Slice(k, 1, hd * dh, dh);
      Tensor vh = Slice(v, 1, hd * dh, dh);
      Tensor att = Softmax(Scale(Matmul(qh, Transpose(kh)), att_scale), 1);
      att = Dropout(att, p, train, rng);
      head_outs.push_back(Matmul(att, vh));
    }
    Tensor o = heads == 1 ? head_outs[0] : Concat(head_outs, 1);
    o = Add(Matmul(o, pb(pre + "attn.wo")), pb(pre + "attn.bo"));
    o = Dropout(o, p, train, rng);
    z = Add(z, o);
    Tensor h2 = LayerNorm(z, pb(pre + "ln2.gain"), pb(pre + "ln2.bias"));
    Tensor f = Gelu(Add(Matmul(h2, pb(pre + "ffn.w1")), pb(pre + "ffn.b1")));
    f = Add(Matmul(f, pb(pre + "ffn.w2")), pb(pre + "ffn.b2"));
    f = Dropout(f, p, train, rng);
    z = Add(z, f);
  }
  return LayerNorm(z, pb("final_norm.gain"), pb("final_norm.bias"));
}

QuantizeResult Model::Quantize(ParamBinder& pb, const Tensor& z, float tau, Rng* rng,
                               bool hard, bool with_noise) const {
  CLSW_CHECK(tau > 0.0f, "quantize: temperature must be positive, got ", tau);
  CLSW_CHECK(!with_noise || rng != nullptr, "quantize: rng required when sampling noise");
  const int64_t t = z.Dim(0);
  const int g_books = cfg_.num_codebooks;
  const int v_entries = cfg_.entries_per_book;

  Tensor logits = Add(Matmul(z, pb("quantizer.logit_w")), pb("quantizer.logit_b"));
  Tensor perturbed = logits;
  if (with_noise) {
    std::vector<float> noise(t * g_books * v_entries);
    for (float& n : noise) {
      const double u = rng->Uniform();
      n = static_cast<float>(-std::log(-std::log(u)));
    }
    perturbed = Add(logits, Tensor({t, static_cast<int64_t>(g_books * v_entries)},
                                   std::move(noise)));
  }

  // Hard selection indices come from the same perturbed logits (forward data).
  QuantizeResult out;
  out.codes.resize(t * g_books);
  {
    std::span<const float> pv = perturbed.Data();
    for (int64_t ti = 0; ti < t; ++ti)
      for (int g = 0; g < g_books; ++g) {
        const float* row = pv.data() + ti * g_books * v_entries + g * v_entries;
        out.codes[ti * g_books + g] =
            static_cast<int>(std::max_element(row, row + v_entries) - row);
      }
  }

  Tensor probs = Softmax(Scale(Reshape(perturbed, {t, g_books, v_entries}), 1.0f / tau), 2);
  Tensor y = probs;
  if (hard) {
    // Straight-through: forward the one-hot argmax, backprop through probs.
    std::vector<float> delta(probs.Data().begin(), probs.Data().end());
    for (float& x : delta) x = -x;
    for (int64_t ti = 0; ti < t; ++ti)
      for (int g = 0; g < g_books; ++g)
        delta[(ti * g_books + g) * v_entries + out.codes[ti * g_books + g]] += 1.0f;
    y = Add(probs, Tensor({t, g_books, v_entries}, std::move(delta)));
  }

  std::vector<Tensor> gathered;
  gathered.reserve(g_books);
  for (int g = 0; g < g_books; ++g) {
    Tensor yg = Reshape(Slice(y, 1, g, 1), {t, v_entries});
    gathered.push_back(Matmul(yg, pb(StrCat("quantizer.codebook", g))));
  }
  Tensor cat = g_books == 1 ? gathered[0] : Concat(gathered, 1);
  out.q = Add(Matmul(cat, pb("quantizer.out_w")), pb("quantizer.out_b"));
  out.probs = probs;
  return out;
}

// ---- Checkpoint I/O --------------------------------------------------------

namespace {

void PutBytes(std::ostream& os, const void* p, size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void PutU32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  PutBytes(os, b, 4);
}

void PutU64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  PutBytes(os, b, 8);
}

void PutF32Array(std::ostream& os, std::span<const float> v) {
  for (float x : v) {
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    PutU32(os, bits);
  }
}

void GetBytes(std::istream& is, void* p, size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw DataError("checkpoint: truncated file");
}

uint32_t GetU32(std::istream& is) {
  unsigned char b[4];
  GetBytes(is, b, 4);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

uint64_t GetU64(std::istream& is) {
  unsigned char b[8];
  GetBytes(is, b, 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void PutTensorRecord(std::ostream& os, const std::string& name, const Tensor& t) {
  PutU32(os, static_cast<uint32_t>(name.size()));
  PutBytes(os, name.data(), name.size());
  PutU32(os, static_cast<uint32_t>(t.Rank()));
  for (int64_t d : t.Dims()) PutU64(os, static_cast<uint64_t>(d));
  PutF32Array(os, t.Data());
}

std::pair<std::string, Tensor> GetTensorRecord(std::istream& is) {
  const uint32_t name_len = GetU32(is);
  CLSW_CHECK_DATA(name_len <= 4096, "checkpoint: implausible tensor name length ", name_len);
  std::string name(name_len, '\0');
  GetBytes(is, name.data(), name_len);
  const uint32_t rank = GetU32(is);
  CLSW_CHECK_DATA(rank <= 8, "checkpoint: implausible tensor rank ", rank);
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int64_t>(GetU64(is));
  const int64_t n = NumElements(shape);
  CLSW_CHECK_DATA(n >= 0 && n <= (int64_t{1} << 33), "checkpoint: implausible tensor size");
  std::vector<float> data(n);
  for (int64_t i = 0; i < n; ++i) {
    uint32_t bits = GetU32(is);
    float x;
    std::memcpy(&x, &bits, 4);
    data[i] = x;
  }
  return {std::move(name), Tensor(std::move(shape), std::move(data))};
}

constexpr char kMagic[4] = {'C', 'L', 'S', 'W'};
constexpr uint32_t kVersion = 1;

}  // namespace

void SaveCheckpoint(const std::string& path, const CheckpointData& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "checkpoint: cannot open '", path, "' for writing");
  PutBytes(os, kMagic, 4);
  PutU32(os, data.version);
  PutU64(os, data.config_json.size());
  PutBytes(os, data.config_json.data(), data.config_json.size());
  PutU64(os, data.tensors.size());
  for (const auto& [name, t] : data.tensors) PutTensorRecord(os, name, t);
  PutU64(os, static_cast<uint64_t>(data.training_step));
  const unsigned char has_opt = data.has_optimizer ? 1 : 0;
  PutBytes(os, &has_opt, 1);
  if (data.has_optimizer) {
    PutU64(os, static_cast<uint64_t>(data.adam_step));
    PutU64(os, data.opt_tensors.size());
    for (const auto& [name, t] : data.opt_tensors) PutTensorRecord(os, name, t);
  }
  os.flush();
  CLSW_CHECK_DATA(os.good(), "checkpoint: write to '", path, "' failed");
}

CheckpointData LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  CLSW_CHECK_DATA(is.good(), "checkpoint: cannot open '", path, "'");
  char magic[4];
  GetBytes(is, magic, 4);
  CLSW_CHECK_DATA(std::memcmp(magic, kMagic, 4) == 0,
                  "checkpoint: bad magic bytes in '", path, "'");
  CheckpointData data;
  data.version = GetU32(is);
  CLSW_CHECK_DATA(data.version == kVersion, "checkpoint: version ", data.version,
                  " unsupported (expected ", kVersion, ")");
  const uint64_t cfg_len = GetU64(is);
  CLSW_CHECK_DATA(cfg_len <= (1u << 20), "checkpoint: implausible config length");
  data.config_json.resize(cfg_len);
  GetBytes(is, data.config_json.data(), cfg_len);
  const uint64_t n_tensors = GetU64(is);
  CLSW_CHECK_DATA(n_tensors <= (1u << 20), "checkpoint: implausible tensor count");
  data.tensors.reserve(n_tensors);
  for (uint64_t i = 0; i < n_tensors; ++i) data.tensors.push_back(GetTensorRecord(is));
  data.training_step = static_cast<int64_t>(GetU64(is));
  unsigned char has_opt = 0;
  GetBytes(is, &has_opt, 1);
  data.has_optimizer = has_opt != 0;
  if (data.has_optimizer) {
    data.adam_step = static_cast<int64_t>(GetU64(is));
    const uint64_t n_opt = GetU64(is);
    CLSW_CHECK_DATA(n_opt <= (1u << 20), "checkpoint: implausible optimizer tensor count");
    for (uint64_t i = 0; i < n_opt; ++i) data.opt_tensors.push_back(GetTensorRecord(is));
  }
  return data;
}

void SaveModelCheckpoint(const std::string& path, const Model& model,
                         const std::string& config_json, int64_t training_step,
                         const AdamState* opt) {
  CheckpointData data;
  data.config_json = config_json;
  data.training_step = training_step;
  for (const Param* p : model.params().All())
    data.tensors.emplace_back(p->name, p->value.Detached());
  if (opt != nullptr) {
    data.has_optimizer = true;
    data.adam_step = opt->step;
    for (const Param* p : model.params().All()) {
      auto mit = opt->m.find(p->name);
      auto vit = opt->v.find(p->name);
      if (mit == opt->m.end() || vit == opt->v.end()) continue;
      data.opt_tensors.emplace_back("m:" + p->name,
                                    Tensor(p->value.Dims(), mit->second));
      data.opt_tensors.emplace_back("v:" + p->name,
                                    Tensor(p->value.Dims(), vit->second));
    }
  }
  SaveCheckpoint(path, data);
}

void LoadWeightsInto(Model* model, const CheckpointData& data, AdamState* opt) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : data.tensors) by_name[name] = &t;
  std::vector<std::string> problems;
  for (Param* p : model->params().All()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      problems.push_back(StrCat("missing tensor '", p->name, "' (want ",
                                ShapeStr(p->value.Dims()), ")"));
      continue;
    }
    if (it->second->Dims() != p->value.Dims()) {
      problems.push_back(StrCat("shape mismatch for '", p->name, "': checkpoint ",
                                ShapeStr(it->second->Dims()), " vs model ",
                                ShapeStr(p->value.Dims())));
    }
    by_name.erase(it);
  }
  for (const auto& [name, t] : by_name)
    problems.push_back(StrCat("unexpected tensor '", name, "' ", ShapeStr(t->Dims())));
  if (!problems.empty())
    throw DataError("checkpoint does not match model config:\n  " +
                    JoinStrings(problems, "\n  "));
  for (Param* p : model->params().All()) {
    for (const auto& [name, t] : data.tensors) {
      if (name != p->name) continue;
      std::copy(t.Data().begin(), t.Data().end(), p->value.MutableData().begin());
      break;
    }
  }
  if (opt != nullptr && data.has_optimizer) {
    opt->step = data.adam_step;
    opt->m.clear();
    opt->v.clear();
    for (const auto& [name, t] : data.opt_tensors) {
      if (name.rfind("m:", 0) == 0)
        opt->m[name.substr(2)] = std::vector<float>(t.Data().begin(), t.Data().end());
      else if (name.rfind("v:", 0) == 0)
        opt->v[name.substr(2)] = std::vector<float>(t.Data().begin(), t.Data().end());
    }
  }
}

}  // namespace clsw
