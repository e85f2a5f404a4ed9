// tests/test_config.cc

#include <filesystem>
#include <fstream>

#include "clsw/config.h"
#include "doctest.h"

using namespace clsw;

TEST_CASE("presets carry the documented defaults") {
  RunConfig full = RunConfig::FullScale();
  CHECK(full.model.model_dim == 768);
  CHECK(full.model.num_blocks == 12);
  CHECK(full.model.num_heads == 8);
  CHECK(full.model.num_codebooks == 2);
  CHECK(full.model.entries_per_book == 320);
  CHECK(full.pretrain.peak_lr == doctest::Approx(0.0005f));
  CHECK(full.pretrain.warmup_steps == 32000);
  CHECK(full.pretrain.steps == 300000);
  CHECK(full.pretrain.objective.crop_limit == 250000);
  CHECK(full.pretrain.objective.alpha == doctest::Approx(0.1f));
  CHECK(full.model.dropout == doctest::Approx(0.1f));
  CHECK(full.lm.order == 5);
  CHECK(full.decode.beam == 128);

  RunConfig desk = RunConfig::Desk();
  CHECK(desk.model.model_dim == 64);
  CHECK(desk.model.num_blocks == 2);
  CHECK(desk.model.entries_per_book == 32);
  desk.Validate();
  full.Validate();
  CHECK_THROWS_AS(RunConfig::FromPreset("huge"), ConfigError);
}

TEST_CASE("json round trip preserves the config") {
  RunConfig desk = RunConfig::Desk();
  const std::string json = RunConfigToJson(desk);
  RunConfig back = RunConfigFromJson(json, RunConfig::Desk());
  CHECK(back.model.model_dim == desk.model.model_dim);
  CHECK(back.pretrain.steps == desk.pretrain.steps);
  CHECK(back.pretrain.objective.kappa == desk.pretrain.objective.kappa);
  CHECK(back.decode.lm_weight == desk.decode.lm_weight);
  CHECK(back.pipeline.snr_min_db == desk.pipeline.snr_min_db);
  CHECK(RunConfigToJson(back) == json);
}

TEST_CASE("unknown keys are rejected exhaustively, not first-only") {
  const std::string bad = R"({
    "pretrain": {"steps": 10, "bogus_a": 1, "bogus_b": 2},
    "decode": {"bogus_c": 3},
    "nonsense": {}
  })";
  try {
    RunConfigFromJson(bad, RunConfig::Desk());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("pretrain.bogus_a") != std::string::npos);
    CHECK(msg.find("pretrain.bogus_b") != std::string::npos);
    CHECK(msg.find("decode.bogus_c") != std::string::npos);
    CHECK(msg.find("nonsense") != std::string::npos);
  }
}

TEST_CASE("invalid values are reported together") {
  const std::string bad = R"({
    "pretrain": {"steps": 0, "kappa": -1.0},
    "lm": {"order": 99}
  })";
  try {
    RunConfigFromJson(bad, RunConfig::Desk());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("pretrain.steps") != std::string::npos);
    CHECK(msg.find("kappa") != std::string::npos);
    CHECK(msg.find("lm.order") != std::string::npos);
  }
}

TEST_CASE("partial overrides merge over the preset") {
  const std::string partial = R"({"model": {"num_blocks": 4}, "pretrain": {"steps": 77}})";
  RunConfig cfg = RunConfigFromJson(partial, RunConfig::Desk());
  CHECK(cfg.model.num_blocks == 4);
  CHECK(cfg.model.model_dim == 64);  // desk default retained
  CHECK(cfg.pretrain.steps == 77);
  CHECK(cfg.pretrain.batch_size == RunConfig::Desk().pretrain.batch_size);
}

TEST_CASE("resolved config file round trips") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "clsw_cfg.json").string();
  RunConfig cfg = RunConfig::Desk();
  cfg.pretrain.steps = 123;
  WriteResolvedConfig(cfg, path);
  RunConfig back = LoadRunConfigFile(path, RunConfig::Desk());
  CHECK(back.pretrain.steps == 123);
  fs::remove(path);
  CHECK_THROWS_AS(LoadRunConfigFile("/nonexistent/cfg.json", RunConfig::Desk()),
                  ConfigError);
}

TEST_CASE("diversity form parses both variants") {
  RunConfig paper_form = RunConfigFromJson(R"({"pretrain": {"diversity_form": "paper"}})",
                                           RunConfig::Desk());
  CHECK(paper_form.pretrain.objective.diversity_form == DiversityForm::kPaper);
  RunConfig ref_form = RunConfigFromJson(R"({"pretrain": {"diversity_form": "reference"}})",
                                         RunConfig::Desk());
  CHECK(ref_form.pretrain.objective.diversity_form == DiversityForm::kReference);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"pretrain": {"diversity_form": "wat"}})",
                                    RunConfig::Desk()),
                  ConfigError);
}
