#include <doctest.h>

#include <string>

#include <json.hpp>

#include "selfalign/config.hpp"
#include "selfalign/errors.hpp"
#include "support.hpp"

namespace {

using namespace selfalign;

// A syntactically complete config in `dir` with its own tiny input files;
// callers mutate the JSON to probe individual validations.
nlohmann::ordered_json base_config(const std::filesystem::path& dir) {
  testsup::write_file(
      dir / "probes.jsonl",
      R"({"probe_id":"p1","question_id":"Q1","language":"en","category_index":1,)"
      R"("template":"A is _ to me.","option_a":"x","option_b":"y"})"
      "\n");
  testsup::write_file(
      dir / "survey.jsonl",
      R"({"question_id":"Q1","country":"United States","scale_size":2,)"
      R"("shares":[0.8,0.2],"orientation":"low_is_option_a"})"
      "\n");
  testsup::write_file(
      dir / "rules.jsonl",
      R"({"probe_id":"*","base_prob_majority":0.3,"cue_gain":0.2})"
      "\n");
  nlohmann::ordered_json cfg;
  cfg["config_version"] = 1;
  cfg["paths"] = {{"probes", "probes.jsonl"},
                  {"survey", "survey.jsonl"},
                  {"scripted_rules", "rules.jsonl"}};
  cfg["language"] = "en";
  cfg["model_id"] = "scripted";
  cfg["strategy"] = "fully-random";
  cfg["k"] = 3;
  cfg["n_samples"] = 10;
  cfg["mode"] = "answer-only";
  cfg["seeds"] = {{"selection", 1}, {"option_order", 2}, {"sampling", 3},
                  {"shuffle", 4}};
  cfg["parallelism"] = 2;
  cfg["backend"] = {{"kind", "scripted"}, {"noisy", false}};
  cfg["output_dir"] = "out";
  return cfg;
}

RunConfig load_from(const std::filesystem::path& dir,
                    const nlohmann::ordered_json& cfg) {
  testsup::write_file(dir / "config.json", cfg.dump(2) + "\n");
  return load_run_config(dir / "config.json");
}

}  // namespace

TEST_CASE("the shipped demo config loads") {
  const RunConfig cfg =
      load_run_config(testsup::kDataDir / "configs" / "demo_improve.json");
  CHECK(cfg.language == "en");
  CHECK(cfg.strategy == SelectionStrategy::kChrfAcrossCategories);
  CHECK(cfg.k == 5);
  CHECK(cfg.n_samples == 10);
  CHECK(cfg.mode == PromptMode::kAnswerOnly);
  CHECK(cfg.seeds.selection == 101);
  CHECK(cfg.seeds.option_order == 202);
  CHECK(cfg.seeds.sampling == 303);
  CHECK(cfg.seeds.shuffle == 404);
  CHECK(cfg.backend.kind == "scripted");
  // Relative paths were resolved against the config's own directory.
  CHECK(cfg.probes_path.is_absolute());
  CHECK(std::filesystem::exists(cfg.probes_path));
  CHECK(std::filesystem::exists(cfg.rules_path));
  CHECK(cfg.output_dir.is_absolute());
}

TEST_CASE("config validation names the offending field") {
  const auto dir = testsup::temp_dir("config-fields");

  SUBCASE("missing seeds") {
    auto cfg = base_config(dir);
    cfg.erase("seeds");
    try {
      load_from(dir, cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(std::string(err.what()).find("seeds") != std::string::npos);
    }
  }
  SUBCASE("missing one seed") {
    auto cfg = base_config(dir);
    cfg["seeds"].erase("shuffle");
    try {
      load_from(dir, cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(std::string(err.what()).find("shuffle") != std::string::npos);
    }
  }
  SUBCASE("missing output_dir") {
    auto cfg = base_config(dir);
    cfg.erase("output_dir");
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("missing probes path") {
    auto cfg = base_config(dir);
    cfg["paths"].erase("probes");
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("unsupported version") {
    auto cfg = base_config(dir);
    cfg["config_version"] = 2;
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("unknown backend kind") {
    auto cfg = base_config(dir);
    cfg["backend"]["kind"] = "quantum";
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("scripted backend requires a rules file") {
    auto cfg = base_config(dir);
    cfg["paths"].erase("scripted_rules");
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("http backend requires a base url") {
    auto cfg = base_config(dir);
    cfg["backend"] = {{"kind", "http"}};
    CHECK_THROWS_AS(load_from(dir, cfg), ConfigError);
  }
  SUBCASE("referenced files must exist") {
    auto cfg = base_config(dir);
    cfg["paths"]["probes"] = "ghost.jsonl";
    try {
      load_from(dir, cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(std::string(err.what()).find("ghost.jsonl") != std::string::npos);
    }
  }
  SUBCASE("strategy typos list the valid names") {
    auto cfg = base_config(dir);
    cfg["strategy"] = "chrf-everywhere";
    try {
      load_from(dir, cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      const std::string what = err.what();
      CHECK(what.find("fully-random") != std::string::npos);
      CHECK(what.find("random-within-category") != std::string::npos);
      CHECK(what.find("chrf-within-category") != std::string::npos);
      CHECK(what.find("chrf-across-categories") != std::string::npos);
    }
  }
}

TEST_CASE("digest covers effective values but not the output directory") {
  const auto dir = testsup::temp_dir("config-digest");
  const auto cfg_a = base_config(dir);
  const RunConfig a = load_from(dir, cfg_a);
  const std::string digest_a = run_config_digest(a);
  CHECK(digest_a.size() == 64);
  CHECK(run_id(a) == "run-" + digest_a.substr(0, 12));

  auto cfg_b = cfg_a;
  cfg_b["output_dir"] = "somewhere/else";
  CHECK(run_config_digest(load_from(dir, cfg_b)) == digest_a);

  auto cfg_c = cfg_a;
  cfg_c["k"] = 4;
  CHECK(run_config_digest(load_from(dir, cfg_c)) != digest_a);

  CHECK_FALSE(config_to_json(a).contains("output_dir"));
}

TEST_CASE("effective sampling parameters follow the model and mode") {
  const auto dir = testsup::temp_dir("config-params");
  auto cfg = base_config(dir);

  cfg["model_id"] = "meta-llama3-70b";
  RunConfig loaded = load_from(dir, cfg);
  BackendParams params = backend_params(loaded);
  CHECK(params.temperature == 0.6);
  CHECK(params.max_new_tokens == 16);
  CHECK(params.n_samples == 10);

  cfg["temperature"] = 0.123;
  cfg["mode"] = "answer-with-explanation";
  loaded = load_from(dir, cfg);
  params = backend_params(loaded);
  CHECK(params.temperature == 0.123);
  CHECK(params.max_new_tokens == 256);

  cfg["max_new_tokens"] = 64;
  loaded = load_from(dir, cfg);
  CHECK(backend_params(loaded).max_new_tokens == 64);
}
