// tools/clsw_main.cc

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

// Single batch-operator binary: prepare-data, pretrain, finetune, lm-train,
// decode, evaluate, analyze, speaker-stats, make-toy-corpus, gen-wada-table.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "clsw/analysis.h"
#include "clsw/audio.h"
#include "clsw/config.h"
#include "clsw/ctc.h"
#include "clsw/decoder.h"
#include "clsw/finetune.h"
#include "clsw/manifest.h"
#include "clsw/metrics.h"
#include "clsw/model.h"
#include "clsw/ngram.h"
#include "clsw/speaker.h"
#include "clsw/ssl.h"
#include "clsw/textnorm.h"
#include "clsw/threadpool.h"
#include "clsw/toycorpus.h"
#include "clsw/vad.h"
#include "clsw/wada.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace clsw {
namespace {

constexpr uint64_t kBatchSalt = 0xba7c4ull;

struct CommonOpts {
  std::string config_path;
  std::string preset = "desk";
  uint64_t seed = 1;
  int workers = 1;
};

RunConfig ResolveConfig(const CommonOpts& common) {
  RunConfig cfg = RunConfig::FromPreset(common.preset);
  if (!common.config_path.empty()) cfg = LoadRunConfigFile(common.config_path, cfg);
  cfg.Validate();
  return cfg;
}

std::string Stem(const std::string& path) { return fs::path(path).stem().string(); }

// Loads every manifest row's audio (already 16 kHz from prepare-data),
// optionally restricted to a language set.
std::vector<UtteranceAudio> LoadManifestAudio(const Manifest& manifest,
                                              const std::set<std::string>& languages,
                                              int workers) {
  std::vector<const UtteranceRecord*> rows;
  for (const auto& r : manifest.records)
    if (languages.empty() || languages.count(r.language)) rows.push_back(&r);
  std::vector<UtteranceAudio> out(rows.size());
  ParallelFor(static_cast<int64_t>(rows.size()), workers, [&](int64_t i) {
    const UtteranceRecord& r = *rows[i];
    AudioBuffer buf = ReadWav((fs::path(manifest.root) / r.path).string());
    CLSW_CHECK_DATA(buf.sample_rate == kTargetSampleRate, "manifest audio '", r.path,
                    "' is not 16 kHz; run prepare-data first");
    out[i].id = Stem(r.path);
    out[i].language = r.language;
    out[i].samples = std::move(buf.samples);
  });
  return out;
}

void WriteTextFile(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "cannot write '", path, "'");
  os << content;
}

// ---- prepare-data ----------------------------------------------------------

struct PrepareOpts {
  std::string in_dir, out_dir;
  double snr_min = 25.0, min_dur = 1.0, max_dur = 30.0;
  double split = 0.9;
  int vad_mode = 2;
  std::string transcripts_path;
};

int RunPrepareData(const CommonOpts& common, const PrepareOpts& opts) {
  RunConfig cfg = ResolveConfig(common);
  cfg.pipeline.snr_min_db = opts.snr_min;
  cfg.pipeline.min_dur_sec = opts.min_dur;
  cfg.pipeline.max_dur_sec = opts.max_dur;
  cfg.pipeline.vad_mode = opts.vad_mode;
  cfg.pipeline.train_ratio = opts.split;
  cfg.Validate();

  // Optional utterance-id -> transcript map.
  std::map<std::string, std::string> transcripts;
  if (!opts.transcripts_path.empty()) {
    std::ifstream ts(opts.transcripts_path);
    CLSW_CHECK_DATA(ts.good(), "cannot open transcripts '", opts.transcripts_path, "'");
    std::string line;
    while (std::getline(ts, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> f = SplitString(line, '\t');
      CLSW_CHECK_DATA(f.size() >= 3, "bad transcripts row: ", line);
      transcripts[f[0]] = f[2];
    }
  }

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(opts.in_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  CLSW_CHECK_DATA(!files.empty(), "no .wav files under '", opts.in_dir, "'");

  fs::create_directories(fs::path(opts.out_dir) / "audio");
  VadConfig vad;
  vad.mode = cfg.pipeline.vad_mode;
  vad.min_chunk_sec = cfg.pipeline.min_dur_sec;
  vad.max_chunk_sec = cfg.pipeline.max_dur_sec;

  std::vector<std::vector<UtteranceRecord>> per_file(files.size());
  std::vector<int64_t> rejected_snr(files.size(), 0);
  ParallelFor(static_cast<int64_t>(files.size()), common.workers, [&](int64_t i) {
    const std::string& file = files[i];
    AudioBuffer buf = IngestConvertFile(file);
    // Language tag: parent directory name.
    const std::string language = fs::path(file).parent_path().filename().string();
    const std::vector<ChunkSpan> chunks = VadChunk(buf, vad);
    const std::string stem = Stem(file);
    for (size_t c = 0; c < chunks.size(); ++c) {
      std::span<const float> span(buf.samples.data() + chunks[c].start,
                                  static_cast<size_t>(chunks[c].end - chunks[c].start));
      const double snr = WadaSnrDb(span);
      if (snr < cfg.pipeline.snr_min_db) {
        rejected_snr[i]++;
        continue;
      }
      const std::string rel =
          (fs::path("audio") / language / StrCat(stem, "_c", c, ".wav")).string();
      fs::create_directories(fs::path(opts.out_dir) / "audio" / language);
      WriteWav16k((fs::path(opts.out_dir) / rel).string(), span);
      UtteranceRecord rec;
      rec.path = rel;
      rec.num_samples = static_cast<int64_t>(span.size());
      rec.language = language;
      rec.snr_db = snr;
      // A transcript only stays attached when the file survived as exactly
      // one chunk; otherwise the alignment to chunks is unknown.
      if (chunks.size() == 1 && transcripts.count(stem)) rec.transcript = transcripts[stem];
      per_file[i].push_back(std::move(rec));
    }
  });

  std::vector<UtteranceRecord> records;
  int64_t total_rejected = 0;
  for (size_t i = 0; i < per_file.size(); ++i) {
    for (auto& r : per_file[i]) records.push_back(std::move(r));
    total_rejected += rejected_snr[i];
  }
  CLSW_CHECK_DATA(!records.empty(), "no chunks survived the duration/SNR filters");

  ManifestSplit split =
      BuildManifest(std::move(records), opts.out_dir, cfg.pipeline.train_ratio, common.seed);
  WriteManifest(split.train, (fs::path(opts.out_dir) / "train.tsv").string());
  WriteManifest(split.valid, (fs::path(opts.out_dir) / "valid.tsv").string());
  const std::string summary = DurationSummary(split.train, split.valid);
  WriteTextFile((fs::path(opts.out_dir) / "durations.tsv").string(), summary);
  WriteResolvedConfig(cfg, (fs::path(opts.out_dir) / "config.json").string());
  std::cout << summary;
  std::cout << "prepare-data: " << split.train.records.size() << " train / "
            << split.valid.records.size() << " valid utterances; " << total_rejected
            << " chunks rejected below " << cfg.pipeline.snr_min_db << " dB\n";
  return 0;
}

// ---- pretrain ---------------------------------------------------------------

struct PretrainOpts {
  std::string train_manifest, valid_manifest, out_dir;
  std::vector<std::string> languages;
  int64_t steps = -1;  // -1: use config
  int batch_size = -1;
  std::string init_checkpoint;
};

std::string PretrainConfigJson(const RunConfig& cfg) {
  json j = json::parse(RunConfigToJson(cfg));
  j["kind"] = "pretrain";
  return j.dump();
}

int RunPretrain(const CommonOpts& common, const PretrainOpts& opts) {
  RunConfig cfg = ResolveConfig(common);
  if (opts.steps > 0) cfg.pretrain.steps = opts.steps;
  if (opts.batch_size > 0) cfg.pretrain.batch_size = opts.batch_size;
  cfg.Validate();

  Manifest manifest = ReadManifest(opts.train_manifest);
  std::set<std::string> langs(opts.languages.begin(), opts.languages.end());
  std::vector<UtteranceAudio> train = LoadManifestAudio(manifest, langs, common.workers);
  CLSW_CHECK_DATA(!train.empty(), "no training utterances after language filtering");

  fs::create_directories(opts.out_dir);
  WriteResolvedConfig(cfg, (fs::path(opts.out_dir) / "config.json").string());

  Model model(cfg.model, common.seed);
  AdamState opt;
  opt.peak_lr = cfg.pretrain.peak_lr;
  opt.warmup_steps = cfg.pretrain.warmup_steps;
  opt.total_steps = cfg.pretrain.steps;
  if (!opts.init_checkpoint.empty()) {
    CheckpointData data = LoadCheckpoint(opts.init_checkpoint);
    LoadWeightsInto(&model, data, &opt);
  }

  std::ofstream log((fs::path(opts.out_dir) / "pretrain_log.csv").string(),
                    std::ios::trunc);
  log << "step,loss,l_m,l_d,lr,ppl_codebook\n";
  Rng batch_rng = Rng(common.seed ^ kBatchSalt);
  for (int64_t step = 0; step < cfg.pretrain.steps; ++step) {
    Rng step_rng = batch_rng.Fork(static_cast<uint64_t>(step));
    std::vector<const UtteranceAudio*> batch;
    for (int b = 0; b < cfg.pretrain.batch_size; ++b)
      batch.push_back(&train[step_rng.UniformInt(static_cast<int64_t>(train.size()))]);
    PretrainStepStats stats =
        PretrainStep(&model, &opt, batch, cfg.pretrain.objective, step, common.seed);
    if (step % cfg.pretrain.log_every == 0 || step + 1 == cfg.pretrain.steps) {
      log << step << ',' << stats.loss.l << ',' << stats.loss.l_m << ',' << stats.loss.l_d
          << ',' << stats.lr << ',' << stats.code_perplexity << '\n';
      log.flush();
    }
    if (cfg.pretrain.checkpoint_every > 0 &&
        (step + 1) % cfg.pretrain.checkpoint_every == 0 &&
        step + 1 < cfg.pretrain.steps) {
      SaveModelCheckpoint(
          (fs::path(opts.out_dir) / StrCat("checkpoint_", step + 1, ".bin")).string(),
          model, PretrainConfigJson(cfg), step + 1, &opt);
    }
  }
  SaveModelCheckpoint((fs::path(opts.out_dir) / "checkpoint.bin").string(), model,
                      PretrainConfigJson(cfg), cfg.pretrain.steps, &opt);

  if (!opts.valid_manifest.empty()) {
    Manifest valid = ReadManifest(opts.valid_manifest);
    std::vector<UtteranceAudio> valid_utts = LoadManifestAudio(valid, {}, common.workers);
    auto rows = PerLanguageValidLoss(model, valid_utts, cfg.pretrain.objective,
                                     cfg.pretrain.steps, common.seed);
    WriteTextFile((fs::path(opts.out_dir) / "valid_losses.csv").string(),
                  LanguageLossCsv(rows));
    for (const auto& r : rows)
      std::cout << "valid " << r.language << ": l_m=" << r.l_m << " l_d=" << r.l_d
                << " l=" << r.l << "\n";
  }
  std::cout << "pretrain: " << cfg.pretrain.steps << " steps done; checkpoint at "
            << (fs::path(opts.out_dir) / "checkpoint.bin").string() << "\n";
  return 0;
}

// ---- finetune ---------------------------------------------------------------

struct FinetuneOpts {
  std::string checkpoint, manifest, out_dir, vocab_path;
  int64_t steps = -1;
  int batch_size = -1;
};

Vocabulary VocabularyFromTranscripts(const std::vector<std::string>& texts) {
  std::set<std::string> chars;
  for (const std::string& text : texts) {
    size_t i = 0;
    while (i < text.size()) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      size_t len = 1;
      if ((c & 0xE0) == 0xC0) len = 2;
      else if ((c & 0xF0) == 0xE0) len = 3;
      else if ((c & 0xF8) == 0xF0) len = 4;
      len = std::min(len, text.size() - i);
      const std::string ch = text.substr(i, len);
      if (ch != " ") chars.insert(ch);
      i += len;
    }
  }
  return Vocabulary::FromSymbols({chars.begin(), chars.end()});
}

int RunFinetune(const CommonOpts& common, const FinetuneOpts& opts) {
  RunConfig cfg = ResolveConfig(common);
  if (opts.steps > 0) cfg.finetune.steps = opts.steps;
  if (opts.batch_size > 0) cfg.finetune.batch_size = opts.batch_size;
  cfg.Validate();

  CheckpointData ckpt = LoadCheckpoint(opts.checkpoint);
  ModelConfig mcfg = ModelConfigFromJson(ckpt.config_json);
  Model model(mcfg, common.seed);
  LoadWeightsInto(&model, ckpt);

  Manifest manifest = ReadManifest(opts.manifest);
  std::vector<std::string> texts;
  std::vector<const UtteranceRecord*> labeled;
  for (const auto& r : manifest.records) {
    if (r.transcript.empty()) continue;
    labeled.push_back(&r);
    texts.push_back(r.transcript);
  }
  CLSW_CHECK_DATA(!labeled.empty(), "finetune: manifest has no transcripts");

  Vocabulary vocab = opts.vocab_path.empty() ? VocabularyFromTranscripts(texts)
                                             : Vocabulary::Load(opts.vocab_path);
  EnsureCtcHead(&model, vocab, common.seed, cfg.finetune.objective.head_init_scale);

  std::vector<LabeledUtterance> utts(labeled.size());
  ParallelFor(static_cast<int64_t>(labeled.size()), common.workers, [&](int64_t i) {
    const UtteranceRecord& r = *labeled[i];
    AudioBuffer buf = ReadWav((fs::path(manifest.root) / r.path).string());
    utts[i].id = Stem(r.path);
    utts[i].samples = std::move(buf.samples);
    utts[i].target = vocab.Encode(r.transcript);
  });

  fs::create_directories(opts.out_dir);
  WriteResolvedConfig(cfg, (fs::path(opts.out_dir) / "config.json").string());
  vocab.Save((fs::path(opts.out_dir) / "vocab.txt").string());

  AdamState opt;
  opt.peak_lr = cfg.finetune.peak_lr;
  opt.warmup_steps = cfg.finetune.warmup_steps;
  opt.total_steps = cfg.finetune.steps;

  std::ofstream log((fs::path(opts.out_dir) / "finetune_log.csv").string(),
                    std::ios::trunc);
  log << "step,loss,lr,skipped\n";
  Rng batch_rng = Rng(common.seed ^ kBatchSalt);
  for (int64_t step = 0; step < cfg.finetune.steps; ++step) {
    Rng step_rng = batch_rng.Fork(static_cast<uint64_t>(step));
    std::vector<const LabeledUtterance*> batch;
    for (int b = 0; b < cfg.finetune.batch_size; ++b)
      batch.push_back(&utts[step_rng.UniformInt(static_cast<int64_t>(utts.size()))]);
    FinetuneStepStats stats =
        FinetuneStep(&model, &opt, batch, cfg.finetune.objective, step, common.seed);
    if (step % cfg.finetune.log_every == 0 || step + 1 == cfg.finetune.steps) {
      log << step << ',' << stats.loss << ',' << stats.lr << ',' << stats.skipped << '\n';
      log.flush();
    }
  }

  json cfg_json = json::parse(RunConfigToJson(cfg));
  cfg_json["kind"] = "finetune";
  cfg_json["vocab"] = vocab.Symbols();
  SaveModelCheckpoint((fs::path(opts.out_dir) / "checkpoint.bin").string(), model,
                      cfg_json.dump(), cfg.finetune.steps, nullptr);
  std::cout << "finetune: " << cfg.finetune.steps << " steps done; checkpoint at "
            << (fs::path(opts.out_dir) / "checkpoint.bin").string() << "\n";
  return 0;
}

// ---- lm-train ---------------------------------------------------------------

struct LmTrainOpts {
  std::string text_path, out_path, language = "en";
  int order = -1;
  double discount = -1.0;
  bool normalize = true;
};

int RunLmTrain(const CommonOpts& common, const LmTrainOpts& opts) {
  RunConfig cfg = ResolveConfig(common);
  if (opts.order > 0) cfg.lm.order = opts.order;
  if (opts.discount > 0) cfg.lm.discount = opts.discount;
  cfg.Validate();

  std::ifstream is(opts.text_path);
  CLSW_CHECK_DATA(is.good(), "lm-train: cannot open '", opts.text_path, "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (opts.normalize) line = NormalizeText(line, opts.language);
    if (!line.empty()) lines.push_back(line);
  }
  NGramModel lm = NGramModel::Train(lines, cfg.lm.order, cfg.lm.discount);
  lm.Save(opts.out_path);
  std::cout << "lm-train: order " << lm.order() << ", vocab " << lm.VocabSize()
            << ", written to " << opts.out_path << "\n";
  return 0;
}

// ---- decode -----------------------------------------------------------------

struct DecodeOpts {
  std::string checkpoint, manifest, out_dir, lm_path;
  std::string decoder = "viterbi";
  int beam = -1;
  double lm_weight = std::numeric_limits<double>::quiet_NaN();
  double word_score = std::numeric_limits<double>::quiet_NaN();
};

struct LoadedAsrModel {
  Vocabulary vocab;
  Model model;
};

LoadedAsrModel LoadAsrCheckpoint(const std::string& path, uint64_t seed) {
  CheckpointData ckpt = LoadCheckpoint(path);
  json j;
  try {
    j = json::parse(ckpt.config_json);
  } catch (const json::exception& e) {
    throw DataError(StrCat("checkpoint config is not valid JSON: ", e.what()));
  }
  CLSW_CHECK_DATA(j.contains("vocab"), "checkpoint at '", path,
                  "' has no vocabulary; expected a finetuned model");
  std::vector<std::string> symbols = j.at("vocab").get<std::vector<std::string>>();
  LoadedAsrModel out{Vocabulary::FromSymbols(std::move(symbols)),
                     Model(ModelConfigFromJson(ckpt.config_json), seed)};
  EnsureCtcHead(&out.model, out.vocab, seed);
  LoadWeightsInto(&out.model, ckpt);
  return out;
}

int RunDecode(const CommonOpts& common, const DecodeOpts& opts) {
  RunConfig cfg = ResolveConfig(common);
  if (opts.beam > 0) cfg.decode.beam = opts.beam;
  if (!std::isnan(opts.lm_weight)) cfg.decode.lm_weight = static_cast<float>(opts.lm_weight);
  if (!std::isnan(opts.word_score))
    cfg.decode.word_score = static_cast<float>(opts.word_score);
  cfg.Validate();

  LoadedAsrModel asr = LoadAsrCheckpoint(opts.checkpoint, common.seed);
  NGramModel lm;
  const bool use_lm = opts.decoder == "beam" && !opts.lm_path.empty();
  if (use_lm) lm = NGramModel::Load(opts.lm_path);

  Manifest manifest = ReadManifest(opts.manifest);
  std::vector<UtteranceAudio> utts = LoadManifestAudio(manifest, {}, common.workers);

  struct Row {
    std::string id, hyp;
    double score;
  };
  std::vector<Row> rows(utts.size());
  FinetuneConfig eval_cfg = cfg.finetune.objective;
  BeamConfig beam_cfg;
  beam_cfg.beam = cfg.decode.beam;
  beam_cfg.lm_weight = use_lm ? cfg.decode.lm_weight : 0.0f;
  beam_cfg.word_score = cfg.decode.word_score;
  beam_cfg.nbest = cfg.decode.nbest;

  ParallelFor(static_cast<int64_t>(utts.size()), common.workers, [&](int64_t i) {
    ParamBinder pb(nullptr, &asr.model.params());
    Tensor lp =
        CtcLogProbs(asr.model, pb, utts[i].samples, /*train=*/false, eval_cfg, nullptr);
    rows[i].id = utts[i].id;
    if (opts.decoder == "viterbi") {
      rows[i].hyp = GreedyDecode(lp, asr.vocab);
      rows[i].score = 0.0;
    } else {
      DecodeResult res = BeamSearchDecode(lp, asr.vocab, use_lm ? &lm : nullptr, beam_cfg);
      rows[i].hyp = res.best;
      rows[i].score = res.score;
    }
  });

  fs::create_directories(opts.out_dir);
  WriteResolvedConfig(cfg, (fs::path(opts.out_dir) / "config.json").string());
  std::ostringstream os;
  os.precision(8);
  for (const Row& r : rows) os << r.id << '\t' << r.hyp << '\t' << r.score << '\n';
  WriteTextFile((fs::path(opts.out_dir) / "hyps.tsv").string(), os.str());
  std::cout << "decode: " << rows.size() << " utterances -> "
            << (fs::path(opts.out_dir) / "hyps.tsv").string() << "\n";
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateOpts {
  std::string refs_path, hyps_path, out_path;
  std::string pretraining = "-", finetuning = "-", decoding = "-";
};

std::map<std::string, std::string> ReadRefTable(const std::string& path) {
  std::ifstream is(path);
  CLSW_CHECK_DATA(is.good(), "evaluate: cannot open '", path, "'");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitString(line, '\t');
    if (f.size() >= 5) {
      out[Stem(f[0])] = f[4];  // manifest row with transcript
    } else if (f.size() >= 2) {
      out[f[0]] = f[1];  // id \t text
    }
  }
  CLSW_CHECK_DATA(!out.empty(), "evaluate: no references in '", path, "'");
  return out;
}

int RunEvaluate(const CommonOpts&, const EvaluateOpts& opts) {
  std::map<std::string, std::string> refs = ReadRefTable(opts.refs_path);
  std::ifstream hyps(opts.hyps_path);
  CLSW_CHECK_DATA(hyps.good(), "evaluate: cannot open '", opts.hyps_path, "'");

  std::ostringstream per_utt;
  per_utt << "utt_id\twer\tcer\n";
  double word_edits = 0, word_total = 0, char_edits = 0, char_total = 0;
  int64_t scored = 0, missing = 0;
  std::string line;
  while (std::getline(hyps, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitString(line, '\t');
    CLSW_CHECK_DATA(f.size() >= 2, "evaluate: bad hyps row: ", line);
    const std::string& id = f[0];
    const std::string& hyp = f[1];
    auto it = refs.find(id);
    if (it == refs.end()) {
      ++missing;
      continue;
    }
    const double wer = Wer(it->second, hyp);
    const double cer = Cer(it->second, hyp);
    per_utt << id << '\t' << wer << '\t' << cer << '\n';
    // Corpus-level rates aggregate edit counts over reference lengths.
    std::istringstream ws(it->second);
    std::string w;
    double ref_words = 0;
    while (ws >> w) ++ref_words;
    double ref_chars = 0;
    size_t ci = 0;
    while (ci < it->second.size()) {
      const unsigned char ch = static_cast<unsigned char>(it->second[ci]);
      size_t len = 1;
      if ((ch & 0xE0) == 0xC0) len = 2;
      else if ((ch & 0xF0) == 0xE0) len = 3;
      else if ((ch & 0xF8) == 0xF0) len = 4;
      if (it->second[ci] != ' ') ++ref_chars;
      ci += len;
    }
    word_edits += wer * ref_words;
    word_total += ref_words;
    char_edits += cer * ref_chars;
    char_total += ref_chars;
    ++scored;
  }
  CLSW_CHECK_DATA(scored > 0, "evaluate: no scored utterances");
  if (missing > 0) Warn(StrCat("evaluate: ", missing, " hypotheses had no reference"));

  const double wer = word_edits / word_total;
  const double cer = char_edits / char_total;
  std::ostringstream summary;
  summary << "pretraining\tfinetuning\tdecoding\twer\tcer\n";
  summary << opts.pretraining << '\t' << opts.finetuning << '\t' << opts.decoding << '\t'
          << wer << '\t' << cer << '\n';
  if (!opts.out_path.empty()) {
    WriteTextFile(opts.out_path, per_utt.str());
    WriteTextFile(opts.out_path + ".summary.tsv", summary.str());
  }
  std::cout << summary.str();
  return 0;
}

// ---- analyze ----------------------------------------------------------------

struct AnalyzeOpts {
  std::string checkpoint, manifest, out_dir;
  std::string mono_losses, multi_losses;
  int n_utts = 200;
  int k = 5;
  bool l2 = false;
};

std::vector<LanguageLossRow> ReadLossCsv(const std::string& path) {
  std::vector<LanguageLossRow> rows;
  if (path.empty()) return rows;
  std::ifstream is(path);
  CLSW_CHECK_DATA(is.good(), "analyze: cannot open loss table '", path, "'");
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitString(line, ',');
    CLSW_CHECK_DATA(f.size() >= 4, "analyze: bad loss row: ", line);
    LanguageLossRow r;
    r.language = f[0];
    r.l_m = std::stod(f[1]);
    r.l_d = std::stod(f[2]);
    r.l = std::stod(f[3]);
    rows.push_back(std::move(r));
  }
  return rows;
}

int RunAnalyze(const CommonOpts& common, const AnalyzeOpts& opts) {
  CheckpointData ckpt = LoadCheckpoint(opts.checkpoint);
  Model model(ModelConfigFromJson(ckpt.config_json), common.seed);
  // Finetuned checkpoints carry a CTC head; attach it before loading weights.
  json j = json::parse(ckpt.config_json, nullptr, false);
  if (j.is_object() && j.contains("vocab")) {
    Vocabulary vocab =
        Vocabulary::FromSymbols(j.at("vocab").get<std::vector<std::string>>());
    EnsureCtcHead(&model, vocab, common.seed);
  }
  LoadWeightsInto(&model, ckpt);

  Manifest manifest = ReadManifest(opts.manifest);
  std::vector<UtteranceAudio> utts = LoadManifestAudio(manifest, {}, common.workers);
  auto usage = ExtractCodebookUsage(model, utts, opts.n_utts, common.seed, opts.l2);
  CLSW_CHECK_DATA(static_cast<int>(usage.size()) >= opts.k, "analyze: k=", opts.k,
                  " larger than the number of languages ", usage.size());
  AnalysisReport report = RunUsageAnalysis(usage, opts.k, common.seed);
  EmitReport(report, ReadLossCsv(opts.mono_losses), ReadLossCsv(opts.multi_losses),
             opts.out_dir);
  std::cout << "analyze: " << usage.size() << " languages, k=" << opts.k
            << ", inertia=" << report.inertia << ", outputs in " << opts.out_dir << "\n";
  for (size_t i = 0; i < report.languages.size(); ++i)
    std::cout << "  " << report.languages[i] << " -> cluster " << report.assignments[i]
              << "\n";
  return 0;
}

// ---- speaker-stats ----------------------------------------------------------

struct SpeakerStatsOpts {
  std::string manifest, out_dir, gender_labels;
  double cut_threshold = 0.3;
};

int RunSpeakerStats(const CommonOpts& common, const SpeakerStatsOpts& opts) {
  Manifest manifest = ReadManifest(opts.manifest);
  std::vector<UtteranceAudio> utts = LoadManifestAudio(manifest, {}, common.workers);
  CLSW_CHECK_DATA(!utts.empty(), "speaker-stats: empty manifest");

  std::vector<VoiceEmbedding> embeddings(utts.size());
  ParallelFor(static_cast<int64_t>(utts.size()), common.workers, [&](int64_t i) {
    AudioBuffer buf;
    buf.samples = utts[i].samples;
    buf.sample_rate = kTargetSampleRate;
    embeddings[i] = EmbedVoice(buf, utts[i].id);
  });

  fs::create_directories(opts.out_dir);
  WriteEmbeddingsTsv((fs::path(opts.out_dir) / "embeddings.tsv").string(), embeddings);

  // Source granularity: one report per language directory.
  std::map<std::string, std::vector<size_t>> by_source;
  for (size_t i = 0; i < utts.size(); ++i) by_source[utts[i].language].push_back(i);
  std::ostringstream all;
  all << "[\n";
  bool first = true;
  for (const auto& [source, idx] : by_source) {
    std::vector<VoiceEmbedding> subset;
    for (size_t i : idx) subset.push_back(embeddings[i]);
    SpeakerClusters clusters = EstimateSpeakerCount(subset, opts.cut_threshold);
    if (!first) all << ",\n";
    all << ClusterReportJson(source, clusters);
    first = false;
    std::cout << "speaker-stats: source '" << source << "' -> " << clusters.n_clusters
              << " estimated speakers over " << idx.size() << " utterances\n";
  }
  all << "\n]\n";
  WriteTextFile((fs::path(opts.out_dir) / "speaker_clusters.json").string(), all.str());

  if (!opts.gender_labels.empty()) {
    std::ifstream is(opts.gender_labels);
    CLSW_CHECK_DATA(is.good(), "speaker-stats: cannot open labels '", opts.gender_labels,
                    "'");
    std::map<std::string, std::string> label_map;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> f = SplitString(line, '\t');
      CLSW_CHECK_DATA(f.size() == 2, "speaker-stats: bad label row: ", line);
      label_map[f[0]] = f[1];
    }
    std::vector<VoiceEmbedding> train_embs;
    std::vector<std::string> labels;
    for (const auto& e : embeddings) {
      auto it = label_map.find(e.utt_id);
      if (it == label_map.end()) continue;
      train_embs.push_back(e);
      labels.push_back(it->second);
    }
    GenderModel model = TrainGenderSvm(train_embs, labels, common.seed);
    std::ostringstream preds;
    preds << "utt_id\tgender\n";
    for (const auto& e : embeddings)
      preds << e.utt_id << '\t' << PredictGender(model, e) << '\n';
    WriteTextFile((fs::path(opts.out_dir) / "gender.tsv").string(), preds.str());
    std::cout << "speaker-stats: gender SVM training accuracy " << model.train_accuracy
              << " on " << labels.size() << " labels\n";
  }
  return 0;
}

// ---- make-toy-corpus / gen-wada-table ----------------------------------------

int RunMakeToyCorpus(const CommonOpts& common, const std::string& out_dir,
                     const ToyCorpusConfig& base, int langs, double minutes,
                     double noisy_fraction) {
  ToyCorpusConfig cfg = base;
  cfg.num_languages = langs;
  cfg.minutes_per_language = minutes;
  cfg.noisy_fraction = noisy_fraction;
  cfg.seed = common.seed;
  WriteToyCorpus(cfg, out_dir);
  std::cout << "make-toy-corpus: " << langs << " languages x " << minutes << " min into "
            << out_dir << "\n";
  return 0;
}

int RunGenWadaTable(const CommonOpts& common, const std::string& out_path, int64_t samples,
                    double step) {
  auto table = GenerateWadaTable(-20.0, 100.0, step, samples, common.seed);
  const std::string cmd = StrCat("clsw gen-wada-table --out ", out_path, " --samples ",
                                 samples, " --step ", step, " --seed ", common.seed);
  if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".inc") {
    WriteTextFile(out_path, FormatWadaTableInc(table, cmd));
  } else {
    WriteTextFile(out_path, FormatWadaTableTsv(table));
  }
  std::cout << "gen-wada-table: " << table.size() << " points -> " << out_path << "\n";
  return 0;
}

// ---- main -------------------------------------------------------------------

int Main(int argc, char** argv) {
  CLI::App app{"cross-lingual self-supervised speech toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonOpts common;
  app.add_option("--seed", common.seed, "global random seed")->capture_default_str();
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--preset", common.preset, "config preset: desk or full")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  app.add_option("--workers", common.workers, "file/utterance-level parallelism")
      ->capture_default_str();

  PrepareOpts prep;
  CLI::App* prep_cmd =
      app.add_subcommand("prepare-data", "convert, VAD-chunk, SNR-filter, build manifests");
  prep_cmd->add_option("--in", prep.in_dir, "input directory of wav files")->required();
  prep_cmd->add_option("--out", prep.out_dir, "output directory")->required();
  prep_cmd->add_option("--snr-min", prep.snr_min, "minimum WADA SNR in dB")
      ->capture_default_str();
  prep_cmd->add_option("--min-dur", prep.min_dur, "minimum chunk seconds")
      ->capture_default_str();
  prep_cmd->add_option("--max-dur", prep.max_dur, "maximum chunk seconds")
      ->capture_default_str();
  prep_cmd->add_option("--split", prep.split, "train ratio")->capture_default_str();
  prep_cmd->add_option("--vad-mode", prep.vad_mode, "VAD aggressiveness 0-3")
      ->capture_default_str();
  prep_cmd->add_option("--transcripts", prep.transcripts_path,
                       "TSV id/language/transcript to attach");

  PretrainOpts pre;
  CLI::App* pre_cmd = app.add_subcommand("pretrain", "masked-contrastive pretraining");
  pre_cmd->add_option("--train-manifest", pre.train_manifest, "training manifest")
      ->required();
  pre_cmd->add_option("--valid-manifest", pre.valid_manifest, "validation manifest");
  pre_cmd->add_option("--out", pre.out_dir, "output directory")->required();
  pre_cmd->add_option("--steps", pre.steps, "training steps (overrides config)");
  pre_cmd->add_option("--batch-size", pre.batch_size, "batch size (overrides config)");
  pre_cmd->add_option("--languages", pre.languages, "restrict training to these languages");
  pre_cmd->add_option("--init-checkpoint", pre.init_checkpoint, "resume from a checkpoint");

  FinetuneOpts fin;
  CLI::App* fin_cmd = app.add_subcommand("finetune", "CTC finetuning on labeled data");
  fin_cmd->add_option("--checkpoint", fin.checkpoint, "pretrained checkpoint")->required();
  fin_cmd->add_option("--manifest", fin.manifest, "labeled manifest")->required();
  fin_cmd->add_option("--out", fin.out_dir, "output directory")->required();
  fin_cmd->add_option("--vocab", fin.vocab_path, "vocabulary file (else derived)");
  fin_cmd->add_option("--steps", fin.steps, "training steps (overrides config)");
  fin_cmd->add_option("--batch-size", fin.batch_size, "batch size (overrides config)");

  LmTrainOpts lmt;
  CLI::App* lm_cmd = app.add_subcommand("lm-train", "train the backoff n-gram LM");
  lm_cmd->add_option("--text", lmt.text_path, "text corpus, one sentence per line")
      ->required();
  lm_cmd->add_option("--out", lmt.out_path, "output ARPA-style table")->required();
  lm_cmd->add_option("--order", lmt.order, "n-gram order (overrides config)");
  lm_cmd->add_option("--discount", lmt.discount, "absolute discount (overrides config)");
  lm_cmd->add_option("--language", lmt.language, "normalization language tag")
      ->capture_default_str();
  lm_cmd->add_flag("--no-normalize{false}", lmt.normalize, "skip text normalization");

  DecodeOpts dec;
  CLI::App* dec_cmd = app.add_subcommand("decode", "CTC decoding (viterbi or beam+LM)");
  dec_cmd->add_option("--checkpoint", dec.checkpoint, "finetuned checkpoint")->required();
  dec_cmd->add_option("--manifest", dec.manifest, "manifest to decode")->required();
  dec_cmd->add_option("--out", dec.out_dir, "output directory")->required();
  dec_cmd->add_option("--decoder", dec.decoder, "viterbi | beam")
      ->check(CLI::IsMember({"viterbi", "beam"}))
      ->capture_default_str();
  dec_cmd->add_option("--lm", dec.lm_path, "ARPA-style LM for shallow fusion");
  dec_cmd->add_option("--beam", dec.beam, "beam size (overrides config)");
  dec_cmd->add_option("--lm-weight", dec.lm_weight, "LM weight (overrides config)");
  dec_cmd->add_option("--word-score", dec.word_score, "per-word bonus (overrides config)");

  EvaluateOpts eva;
  CLI::App* eva_cmd = app.add_subcommand("evaluate", "WER/CER scoring");
  eva_cmd->add_option("--refs", eva.refs_path, "references (manifest or id\\ttext TSV)")
      ->required();
  eva_cmd->add_option("--hyps", eva.hyps_path, "hypotheses TSV from decode")->required();
  eva_cmd->add_option("--out", eva.out_path, "per-utterance TSV output path");
  eva_cmd->add_option("--pretraining", eva.pretraining, "summary label");
  eva_cmd->add_option("--finetuning", eva.finetuning, "summary label");
  eva_cmd->add_option("--decoding", eva.decoding, "summary label");

  AnalyzeOpts ana;
  CLI::App* ana_cmd =
      app.add_subcommand("analyze", "codebook usage, k-means, PCA, report emission");
  ana_cmd->add_option("--checkpoint", ana.checkpoint, "pretrained checkpoint")->required();
  ana_cmd->add_option("--manifest", ana.manifest, "manifest to sample from")->required();
  ana_cmd->add_option("--out", ana.out_dir, "output directory")->required();
  ana_cmd->add_option("--n-utts", ana.n_utts, "utterances sampled per language")
      ->capture_default_str();
  ana_cmd->add_option("--k", ana.k, "k-means cluster count")->capture_default_str();
  ana_cmd->add_flag("--l2", ana.l2, "L2-normalize usage vectors instead of per-group L1");
  ana_cmd->add_option("--mono-losses", ana.mono_losses,
                      "monolingual valid_losses.csv for the comparison report");
  ana_cmd->add_option("--multi-losses", ana.multi_losses,
                      "multilingual valid_losses.csv for the comparison report");

  SpeakerStatsOpts spk;
  CLI::App* spk_cmd =
      app.add_subcommand("speaker-stats", "voice embeddings, clustering, gender SVM");
  spk_cmd->add_option("--manifest", spk.manifest, "manifest")->required();
  spk_cmd->add_option("--out", spk.out_dir, "output directory")->required();
  spk_cmd->add_option("--cut-threshold", spk.cut_threshold,
                      "agglomerative cut threshold (cosine distance)")
      ->capture_default_str();
  spk_cmd->add_option("--gender-labels", spk.gender_labels, "TSV utt_id\\tlabel");

  std::string toy_out;
  int toy_langs = 3;
  double toy_minutes = 2.0, toy_noisy = 0.0;
  ToyCorpusConfig toy_base;
  CLI::App* toy_cmd =
      app.add_subcommand("make-toy-corpus", "generate the synthetic multilingual corpus");
  toy_cmd->add_option("--out", toy_out, "output directory")->required();
  toy_cmd->add_option("--langs", toy_langs, "number of languages (1-5)")
      ->capture_default_str();
  toy_cmd->add_option("--minutes-per-lang", toy_minutes, "audio minutes per language")
      ->capture_default_str();
  toy_cmd->add_option("--noisy-fraction", toy_noisy,
                      "fraction of utterances synthesized too noisy to keep")
      ->capture_default_str();
  toy_cmd->add_option("--char-seconds", toy_base.char_seconds, "seconds per character")
      ->capture_default_str();
  toy_cmd->add_option("--min-words", toy_base.min_words, "words per utterance, lower")
      ->capture_default_str();
  toy_cmd->add_option("--max-words", toy_base.max_words, "words per utterance, upper")
      ->capture_default_str();
  toy_cmd->add_option("--min-word-len", toy_base.min_word_len, "characters per word, lower")
      ->capture_default_str();
  toy_cmd->add_option("--max-word-len", toy_base.max_word_len, "characters per word, upper")
      ->capture_default_str();

  std::string wada_out;
  int64_t wada_samples = 1000000;
  double wada_step = 0.5;
  CLI::App* wada_cmd =
      app.add_subcommand("gen-wada-table", "regenerate the WADA SNR inversion table");
  wada_cmd->add_option("--out", wada_out, "output .inc or .tsv path")->required();
  wada_cmd->add_option("--samples", wada_samples, "Monte-Carlo samples per point")
      ->capture_default_str();
  wada_cmd->add_option("--step", wada_step, "grid step in dB")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (prep_cmd->parsed()) return RunPrepareData(common, prep);
  if (pre_cmd->parsed()) return RunPretrain(common, pre);
  if (fin_cmd->parsed()) return RunFinetune(common, fin);
  if (lm_cmd->parsed()) return RunLmTrain(common, lmt);
  if (dec_cmd->parsed()) return RunDecode(common, dec);
  if (eva_cmd->parsed()) return RunEvaluate(common, eva);
  if (ana_cmd->parsed()) return RunAnalyze(common, ana);
  if (spk_cmd->parsed()) return RunSpeakerStats(common, spk);
  if (toy_cmd->parsed())
    return RunMakeToyCorpus(common, toy_out, toy_base, toy_langs, toy_minutes, toy_noisy);
  if (wada_cmd->parsed()) return RunGenWadaTable(common, wada_out, wada_samples, wada_step);
  return 2;
}

}  // namespace
}  // namespace clsw

int main(int argc, char** argv) {
  try {
    return clsw::Main(argc, argv);
  } catch (const clsw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const clsw::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const clsw::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
