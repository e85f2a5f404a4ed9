// clsw/config.cc

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

#include "clsw/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace clsw {

using nlohmann::json;

RunConfig RunConfig::Desk() {
  RunConfig c;
  c.model = ModelConfig::Desk();
  c.pretrain.steps = 1000;
  c.pretrain.batch_size = 4;
  c.pretrain.peak_lr = 1e-3f;
  c.pretrain.warmup_steps = 100;
  c.pretrain.objective.crop_limit = 4000;
  c.pretrain.objective.distractors = 10;
  c.finetune.steps = 600;
  c.finetune.peak_lr = 1e-3f;
  c.finetune.warmup_steps = 50;
  return c;
}

RunConfig RunConfig::FullScale() {
  RunConfig c;
  c.model = ModelConfig::FullScale();
  c.pretrain.steps = 300000;
  c.pretrain.batch_size = 8;
  c.pretrain.peak_lr = 0.0005f;
  c.pretrain.warmup_steps = 32000;
  c.pretrain.log_every = 100;
  c.pretrain.checkpoint_every = 10000;
  c.pretrain.objective.crop_limit = 250000;
  c.pretrain.objective.distractors = 100;
  c.finetune.steps = 50000;
  c.finetune.batch_size = 8;
  c.finetune.peak_lr = 3e-5f;
  c.finetune.warmup_steps = 4000;
  c.finetune.log_every = 100;
  return c;
}

RunConfig RunConfig::FromPreset(const std::string& name) {
  if (name == "desk") return Desk();
  if (name == "full") return FullScale();
  throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
}

void RunConfig::Validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  try {
    model.Validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  check(pretrain.steps >= 1, "pretrain.steps must be >= 1");
  check(pretrain.batch_size >= 1, "pretrain.batch_size must be >= 1");
  check(pretrain.peak_lr > 0.0f, "pretrain.peak_lr must be positive");
  check(pretrain.warmup_steps >= 0, "pretrain.warmup_steps must be >= 0");
  check(pretrain.objective.crop_limit >= 1, "pretrain.crop_limit must be >= 1");
  check(pretrain.objective.distractors >= 0, "pretrain.distractors must be >= 0");
  check(pretrain.objective.kappa > 0.0f, "pretrain.kappa must be positive");
  check(finetune.steps >= 1, "finetune.steps must be >= 1");
  check(finetune.batch_size >= 1, "finetune.batch_size must be >= 1");
  check(finetune.peak_lr > 0.0f, "finetune.peak_lr must be positive");
  check(decode.beam >= 1, "decode.beam must be >= 1");
  check(decode.nbest >= 1, "decode.nbest must be >= 1");
  check(pipeline.snr_min_db >= -20.0 && pipeline.snr_min_db <= 100.0,
        "pipeline.snr_min_db out of range");
  check(pipeline.min_dur_sec > 0.0 && pipeline.max_dur_sec > pipeline.min_dur_sec,
        "pipeline duration bounds invalid");
  check(pipeline.vad_mode >= 0 && pipeline.vad_mode <= 3, "pipeline.vad_mode must be 0-3");
  check(pipeline.train_ratio > 0.0 && pipeline.train_ratio < 1.0,
        "pipeline.train_ratio must be in (0,1)");
  check(lm.order >= 1 && lm.order <= 9, "lm.order must be in [1,9]");
  check(lm.discount > 0.0 && lm.discount < 1.0, "lm.discount must be in (0,1)");
  if (!problems.empty())
    throw ConfigError("config validation failed:\n  " + JoinStrings(problems, "\n  "));
}

namespace {

json PretrainToJson(const PretrainRunConfig& p) {
  return json{{"steps", p.steps},
              {"batch_size", p.batch_size},
              {"peak_lr", p.peak_lr},
              {"warmup_steps", p.warmup_steps},
              {"log_every", p.log_every},
              {"checkpoint_every", p.checkpoint_every},
              {"crop_limit", p.objective.crop_limit},
              {"distractors", p.objective.distractors},
              {"kappa", p.objective.kappa},
              {"alpha", p.objective.alpha},
              {"diversity_form",
               p.objective.diversity_form == DiversityForm::kPaper ? "paper" : "reference"}};
}

json FinetuneToJson(const FinetuneRunConfig& f) {
  return json{{"steps", f.steps},
              {"batch_size", f.batch_size},
              {"peak_lr", f.peak_lr},
              {"warmup_steps", f.warmup_steps},
              {"log_every", f.log_every},
              {"time_mask_prob", f.objective.augment.time_mask_prob},
              {"time_mask_span", f.objective.augment.time_mask_span},
              {"channel_mask_prob", f.objective.augment.channel_mask_prob},
              {"channel_mask_span", f.objective.augment.channel_mask_span},
              {"freeze_transformer_steps", f.objective.freeze_transformer_steps},
              {"head_init_scale", f.objective.head_init_scale}};
}

// Reads known keys into *dst, collecting unknown keys into *unknown.
template <typename Fn>
void ParseSection(const json& j, const std::string& section,
                  const std::set<std::string>& known, std::vector<std::string>* unknown,
                  Fn&& get) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      unknown->push_back(section + "." + it.key());
      continue;
    }
    get(it.key(), it.value());
  }
}

}  // namespace

std::string RunConfigToJson(const RunConfig& cfg) {
  json j;
  j["model"] = json::parse(ModelConfigToJson(cfg.model));
  j["pretrain"] = PretrainToJson(cfg.pretrain);
  j["finetune"] = FinetuneToJson(cfg.finetune);
  j["decode"] = json{{"beam", cfg.decode.beam},
                     {"lm_weight", cfg.decode.lm_weight},
                     {"word_score", cfg.decode.word_score},
                     {"nbest", cfg.decode.nbest}};
  j["pipeline"] = json{{"snr_min_db", cfg.pipeline.snr_min_db},
                       {"min_dur_sec", cfg.pipeline.min_dur_sec},
                       {"max_dur_sec", cfg.pipeline.max_dur_sec},
                       {"vad_mode", cfg.pipeline.vad_mode},
                       {"train_ratio", cfg.pipeline.train_ratio}};
  j["lm"] = json{{"order", cfg.lm.order}, {"discount", cfg.lm.discount}};
  return j.dump(2);
}

RunConfig RunConfigFromJson(const std::string& json_text, const RunConfig& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(StrCat("config: invalid JSON: ", e.what()));
  }
  RunConfig cfg = base;
  std::vector<std::string> unknown;

  static const std::set<std::string> kSections = {"model",  "pretrain", "finetune",
                                                  "decode", "pipeline", "lm"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kSections.count(it.key())) unknown.push_back(it.key());

  if (j.contains("model")) {
    // Merge over the base model config so presets keep unlisted fields;
    // unknown model keys are rejected by the model parser itself.
    json merged = json::parse(ModelConfigToJson(base.model));
    for (auto it = j["model"].begin(); it != j["model"].end(); ++it)
      merged[it.key()] = it.value();
    cfg.model = ModelConfigFromJson(merged.dump());
  }

  if (j.contains("pretrain")) {
    static const std::set<std::string> known = {
        "steps",     "batch_size", "peak_lr",     "warmup_steps",   "log_every",
        "checkpoint_every", "crop_limit", "distractors", "kappa", "alpha",
        "diversity_form"};
    ParseSection(j["pretrain"], "pretrain", known, &unknown,
                 [&](const std::string& k, const json& v) {
                   auto& p = cfg.pretrain;
                   if (k == "steps") p.steps = v.get<int64_t>();
                   else if (k == "batch_size") p.batch_size = v.get<int>();
                   else if (k == "peak_lr") p.peak_lr = v.get<float>();
                   else if (k == "warmup_steps") p.warmup_steps = v.get<int64_t>();
                   else if (k == "log_every") p.log_every = v.get<int64_t>();
                   else if (k == "checkpoint_every") p.checkpoint_every = v.get<int64_t>();
                   else if (k == "crop_limit") p.objective.crop_limit = v.get<int64_t>();
                   else if (k == "distractors") p.objective.distractors = v.get<int>();
                   else if (k == "kappa") p.objective.kappa = v.get<float>();
                   else if (k == "alpha") p.objective.alpha = v.get<float>();
                   else if (k == "diversity_form") {
                     const std::string form = v.get<std::string>();
                     if (form == "paper") {
                       p.objective.diversity_form = DiversityForm::kPaper;
                     } else if (form == "reference") {
                       p.objective.diversity_form = DiversityForm::kReference;
                     } else {
                       throw ConfigError("pretrain.diversity_form must be paper|reference");
                     }
                   }
                 });
  }

  if (j.contains("finetune")) {
    static const std::set<std::string> known = {
        "steps",          "batch_size",        "peak_lr",
        "warmup_steps",   "log_every",         "time_mask_prob",
        "time_mask_span", "channel_mask_prob", "channel_mask_span",
        "freeze_transformer_steps", "head_init_scale"};
    ParseSection(j["finetune"], "finetune", known, &unknown,
                 [&](const std::string& k, const json& v) {
                   auto& f = cfg.finetune;
                   if (k == "steps") f.steps = v.get<int64_t>();
                   else if (k == "batch_size") f.batch_size = v.get<int>();
                   else if (k == "peak_lr") f.peak_lr = v.get<float>();
                   else if (k == "warmup_steps") f.warmup_steps = v.get<int64_t>();
                   else if (k == "log_every") f.log_every = v.get<int64_t>();
                   else if (k == "time_mask_prob")
                     f.objective.augment.time_mask_prob = v.get<float>();
                   else if (k == "time_mask_span")
                     f.objective.augment.time_mask_span = v.get<int>();
                   else if (k == "channel_mask_prob")
                     f.objective.augment.channel_mask_prob = v.get<float>();
                   else if (k == "channel_mask_span")
                     f.objective.augment.channel_mask_span = v.get<int>();
                   else if (k == "freeze_transformer_steps")
                     f.objective.freeze_transformer_steps = v.get<int>();
                   else if (k == "head_init_scale")
                     f.objective.head_init_scale = v.get<float>();
                 });
  }

  if (j.contains("decode")) {
    static const std::set<std::string> known = {"beam", "lm_weight", "word_score", "nbest"};
    ParseSection(j["decode"], "decode", known, &unknown,
                 [&](const std::string& k, const json& v) {
                   if (k == "beam") cfg.decode.beam = v.get<int>();
                   else if (k == "lm_weight") cfg.decode.lm_weight = v.get<float>();
                   else if (k == "word_score") cfg.decode.word_score = v.get<float>();
                   else if (k == "nbest") cfg.decode.nbest = v.get<int>();
                 });
  }

  if (j.contains("pipeline")) {
    static const std::set<std::string> known = {"snr_min_db", "min_dur_sec", "max_dur_sec",
                                                "vad_mode", "train_ratio"};
    ParseSection(j["pipeline"], "pipeline", known, &unknown,
                 [&](const std::string& k, const json& v) {
                   if (k == "snr_min_db") cfg.pipeline.snr_min_db = v.get<double>();
                   else if (k == "min_dur_sec") cfg.pipeline.min_dur_sec = v.get<double>();
                   else if (k == "max_dur_sec") cfg.pipeline.max_dur_sec = v.get<double>();
                   else if (k == "vad_mode") cfg.pipeline.vad_mode = v.get<int>();
                   else if (k == "train_ratio") cfg.pipeline.train_ratio = v.get<double>();
                 });
  }

  if (j.contains("lm")) {
    static const std::set<std::string> known = {"order", "discount"};
    ParseSection(j["lm"], "lm", known, &unknown, [&](const std::string& k, const json& v) {
      if (k == "order") cfg.lm.order = v.get<int>();
      else if (k == "discount") cfg.lm.discount = v.get<double>();
    });
  }

  if (!unknown.empty())
    throw ConfigError("config: unknown keys: " + JoinStrings(unknown, ", "));
  cfg.Validate();
  return cfg;
}

RunConfig LoadRunConfigFile(const std::string& path, const RunConfig& base) {
  std::ifstream is(path);
  if (!is.good()) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return RunConfigFromJson(ss.str(), base);
}

void WriteResolvedConfig(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "config: cannot write '", path, "'");
  os << RunConfigToJson(cfg) << "\n";
}

}  // namespace clsw
