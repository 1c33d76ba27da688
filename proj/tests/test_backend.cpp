#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "selfalign/backend.hpp"
#include "selfalign/errors.hpp"
#include "selfalign/probes.hpp"
#include "selfalign/prompt.hpp"
#include "support.hpp"

namespace {

using namespace selfalign;

struct Fixture {
  ProbeSet probes;
  SurveyTable survey;
  MajorityTable majorities;
};

// Three probes; majorities: p1 -> A, p2 -> B, p3 -> A.
Fixture make_fixture() {
  Fixture fx;
  const std::vector<std::tuple<std::string, std::string, bool>> rows = {
      {"p1", "Q1", true}, {"p2", "Q2", false}, {"p3", "Q3", true}};
  int index = 0;
  for (const auto& [id, question, majority_a] : rows) {
    Probe probe;
    probe.probe_id = id;
    probe.question_id = question;
    probe.language = "en";
    probe.category_index = 1;
    probe.template_text = "Topic " + std::to_string(index++) + " is _ to me.";
    probe.option_a = "important";
    probe.option_b = "unimportant";
    fx.probes.add(probe);
    LikertDistribution dist;
    dist.question_id = question;
    dist.country = "Testland";
    dist.scale_size = 2;
    dist.shares = majority_a ? std::vector<double>{0.8, 0.2}
                             : std::vector<double>{0.2, 0.8};
    dist.orientation = LikertDistribution::Orientation::kLowIsOptionA;
    fx.survey.add(dist);
  }
  fx.majorities = MajorityTable::build(fx.survey, nullptr);
  return fx;
}

BackendParams make_params(int n_samples = 10) {
  BackendParams params;
  params.model_id = "scripted";
  params.temperature = 1.0;
  params.max_new_tokens = 16;
  params.n_samples = n_samples;
  return params;
}

ScriptedBackend make_backend(const Fixture& fx, double base, double gain,
                             bool noisy = false) {
  return ScriptedBackend(fx.probes, fx.majorities, "Testland",
                         {{"*", base, gain}}, noisy);
}

}  // namespace

TEST_CASE("sampling parameter validation") {
  BackendParams params = make_params();
  CHECK_NOTHROW(params.validate());
  params.n_samples = 0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = make_params();
  params.temperature = -0.1;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = make_params();
  params.max_new_tokens = 0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = make_params();
  params.model_id.clear();
  CHECK_THROWS_AS(params.validate(), ConfigError);
}

TEST_CASE("recommended temperatures by model family") {
  CHECK(recommended_temperature("meta-llama3-70b-instruct") == 0.6);
  CHECK(recommended_temperature("Command-R-Plus") == 0.3);
  CHECK(recommended_temperature("mistral-large") == 1.0);
  CHECK(recommended_temperature("gemini-1.5-pro") == 1.0);
  CHECK(recommended_temperature("bloomz-7b") == 1.0);
  CHECK(recommended_temperature("entirely-unknown") == 1.0);
}

TEST_CASE("scripted rule files validate") {
  const auto dir = testsup::temp_dir("rules");
  SUBCASE("well-formed rules load") {
    testsup::write_file(
        dir / "rules.jsonl",
        R"({"probe_id":"p1","base_prob_majority":0.5,"cue_gain":0.1})"
        "\n"
        R"({"probe_id":"*","base_prob_majority":0.3,"cue_gain":0.2})"
        "\n");
    const auto rules = load_scripted_rules(dir / "rules.jsonl");
    REQUIRE(rules.size() == 2);
    CHECK(rules[0].probe_id == "p1");
    CHECK(rules[1].probe_id == "*");
  }
  SUBCASE("duplicates fail") {
    const std::string row =
        R"({"probe_id":"p1","base_prob_majority":0.5,"cue_gain":0.1})";
    testsup::write_file(dir / "rules.jsonl", row + "\n" + row + "\n");
    CHECK_THROWS_AS(load_scripted_rules(dir / "rules.jsonl"), LoadError);
  }
  SUBCASE("empty file fails") {
    testsup::write_file(dir / "rules.jsonl", "\n");
    CHECK_THROWS_AS(load_scripted_rules(dir / "rules.jsonl"), LoadError);
  }
  SUBCASE("out-of-range probabilities fail") {
    testsup::write_file(
        dir / "rules.jsonl",
        R"({"probe_id":"*","base_prob_majority":1.5,"cue_gain":0.0})"
        "\n");
    CHECK_THROWS_AS(load_scripted_rules(dir / "rules.jsonl"), LoadError);
    testsup::write_file(
        dir / "rules.jsonl",
        R"({"probe_id":"*","base_prob_majority":0.5,"cue_gain":2.0})"
        "\n");
    CHECK_THROWS_AS(load_scripted_rules(dir / "rules.jsonl"), LoadError);
  }
}

TEST_CASE("scripted backend emits degenerate probabilities exactly") {
  const Fixture fx = make_fixture();
  const BackendParams params = make_params();
  GenerateContext ctx{"p1", 999};

  ScriptedBackend always = make_backend(fx, 1.0, 0.0);
  const auto all_majority = always.generate("prompt", params, ctx);
  REQUIRE(all_majority.size() == 10);
  for (const auto& response : all_majority) CHECK(response == "important");

  ScriptedBackend never = make_backend(fx, 0.0, 0.0);
  const auto none_majority = never.generate("prompt", params, ctx);
  for (const auto& response : none_majority) CHECK(response == "unimportant");

  // p2's majority is option B.
  GenerateContext ctx2{"p2", 999};
  const auto p2 = always.generate("prompt", params, ctx2);
  for (const auto& response : p2) CHECK(response == "unimportant");
}

TEST_CASE("scripted backend is a pure function of probe, seed and cues") {
  const Fixture fx = make_fixture();
  const BackendParams params = make_params();
  GenerateContext ctx{"p1", 31337};
  ScriptedBackend backend = make_backend(fx, 0.4, 0.0);
  const auto first = backend.generate("some prompt", params, ctx);
  // A different prompt with the same cue count draws the same samples.
  const auto second = backend.generate("another prompt entirely", params, ctx);
  CHECK(first == second);
  // A different run seed draws different samples (with near certainty).
  GenerateContext other_seed{"p1", 31338};
  CHECK(backend.generate("some prompt", params, other_seed) != first);
  CHECK(backend.calls() == 3);
}

TEST_CASE("cue lines raise the majority probability") {
  const Fixture fx = make_fixture();
  const BackendParams params = make_params();
  GenerateContext ctx{"p1", 5};
  // Base 0: without cues, never the majority.
  ScriptedBackend backend = make_backend(fx, 0.0, 0.5);
  const auto bare = backend.generate("Topic 0 is _ to me.", params, ctx);
  for (const auto& response : bare) CHECK(response == "unimportant");
  // Two majority-completed demo lines at gain 0.5 give probability 1.
  const std::string cued =
      "Topic 0 is important to me.\nTopic 1 is unimportant to me.\n\n"
      "Topic 0 is _ to me.";
  const auto with_cues = backend.generate(cued, params, ctx);
  for (const auto& response : with_cues) CHECK(response == "important");
  // Minority-completed lines are not cues.
  const std::string miscued =
      "Topic 0 is unimportant to me.\nTopic 1 is important to me.\n\n"
      "Topic 0 is _ to me.";
  const auto without_cues = backend.generate(miscued, params, ctx);
  CHECK(without_cues == bare);
}

TEST_CASE("monotone coupling: raising the probability never loses majority samples") {
  const Fixture fx = make_fixture();
  const BackendParams params = make_params(50);
  GenerateContext ctx{"p3", 2024};
  ScriptedBackend low = make_backend(fx, 0.3, 0.0);
  ScriptedBackend high = make_backend(fx, 0.8, 0.0);
  const auto low_samples = low.generate("x", params, ctx);
  const auto high_samples = high.generate("x", params, ctx);
  for (std::size_t i = 0; i < low_samples.size(); ++i) {
    if (low_samples[i] == "important") {
      CHECK(high_samples[i] == "important");
    }
  }
}

TEST_CASE("scripted backend requires a rule for the probe") {
  const Fixture fx = make_fixture();
  ScriptedBackend backend(fx.probes, fx.majorities, "Testland",
                          {{"p1", 0.5, 0.0}});
  const BackendParams params = make_params();
  GenerateContext ctx{"p2", 1};
  CHECK_THROWS_AS(backend.generate("x", params, ctx), ConfigError);
  // A probe id that is not in the set at all is a caller bug, not a rules
  // gap, and is reported as such.
  GenerateContext unknown{"ghost", 1};
  CHECK_THROWS_AS(backend.generate("x", params, unknown), std::invalid_argument);
}

TEST_CASE("noisy mode wraps but keeps the option text") {
  const Fixture fx = make_fixture();
  const BackendParams params = make_params();
  GenerateContext ctx{"p1", 7};
  ScriptedBackend backend = make_backend(fx, 1.0, 0.0, /*noisy=*/true);
  const auto responses = backend.generate("x", params, ctx);
  for (const auto& response : responses) {
    CHECK(response == "I would say important.");
    const ParsedAnswer parsed =
        parse_response(response, *fx.probes.find("p1"));
    REQUIRE(parsed.value.has_value());
    CHECK(*parsed.value == AnswerOption::kOptionA);
  }
}

TEST_CASE("cache keys react to every field") {
  const std::string base =
      cache_key("model", "prompt", 1.0, 16, 10, 0, 42);
  CHECK(base == cache_key("model", "prompt", 1.0, 16, 10, 0, 42));
  CHECK(base != cache_key("model2", "prompt", 1.0, 16, 10, 0, 42));
  CHECK(base != cache_key("model", "prompt!", 1.0, 16, 10, 0, 42));
  CHECK(base != cache_key("model", "prompt", 0.9, 16, 10, 0, 42));
  CHECK(base != cache_key("model", "prompt", 1.0, 17, 10, 0, 42));
  CHECK(base != cache_key("model", "prompt", 1.0, 16, 11, 0, 42));
  CHECK(base != cache_key("model", "prompt", 1.0, 16, 10, 1, 42));
  CHECK(base != cache_key("model", "prompt", 1.0, 16, 10, 0, 43));
  // Length-prefixing: shifting a byte across the field boundary matters.
  CHECK(cache_key("ab", "c", 1.0, 16, 10, 0, 42) !=
        cache_key("a", "bc", 1.0, 16, 10, 0, 42));
}

TEST_CASE("response cache round trip and persistence") {
  const auto dir = testsup::temp_dir("cache-rt");
  {
    ResponseCache cache = ResponseCache::open(dir);
    CHECK(cache.size() == 0);
    CHECK_FALSE(cache.get("k1").has_value());
    cache.put("k1", "hello");
    cache.put("k2", "newline\nand \"quotes\"");
    cache.put("k1", "ignored");  // re-put is a no-op
    CHECK(cache.size() == 2);
    REQUIRE(cache.get("k1").has_value());
    CHECK(*cache.get("k1") == "hello");
    CHECK(*cache.get("k2") == "newline\nand \"quotes\"");
  }
  {
    // Reopen from disk.
    ResponseCache cache = ResponseCache::open(dir);
    CHECK(cache.size() == 2);
    CHECK(*cache.get("k1") == "hello");
    CHECK(*cache.get("k2") == "newline\nand \"quotes\"");
  }
  {
    // A stale or missing index is rebuilt from the store.
    std::filesystem::remove(dir / "cache.idx");
    ResponseCache cache = ResponseCache::open(dir);
    CHECK(cache.size() == 2);
    CHECK(std::filesystem::exists(dir / "cache.idx"));
  }
}

TEST_CASE("corrupt cache stores are rejected") {
  const auto dir = testsup::temp_dir("cache-corrupt");
  testsup::write_file(dir / "cache.jsonl", "this is not json\n");
  CHECK_THROWS_AS(ResponseCache::open(dir), CacheCorruptError);
  testsup::write_file(dir / "cache.jsonl", R"({"key":"a"})" "\n");
  CHECK_THROWS_AS(ResponseCache::open(dir), CacheCorruptError);
}

TEST_CASE("caching backend replays with zero inner calls once warm") {
  const Fixture fx = make_fixture();
  const auto dir = testsup::temp_dir("cache-backend");
  const BackendParams params = make_params();
  GenerateContext ctx{"p1", 11};

  ScriptedBackend inner = make_backend(fx, 1.0, 0.0);
  ResponseCache cache = ResponseCache::open(dir);
  CachingBackend caching(inner, cache);

  const auto first = caching.generate("prompt-a", params, ctx);
  CHECK(inner.calls() == 1);
  const auto replay = caching.generate("prompt-a", params, ctx);
  CHECK(inner.calls() == 1);  // served from cache
  CHECK(replay == first);
  const auto other = caching.generate("prompt-b", params, ctx);
  CHECK(inner.calls() == 2);
  CHECK(other == first);  // scripted backend ignores the prompt without cues

  const CacheStats stats = caching.stats();
  CHECK(stats.inner_calls == 2);
  CHECK(stats.served_from_cache == 1);
  CHECK(stats.samples_from_cache == 10);
  CHECK(stats.samples_generated == 20);

  // A fresh caching layer over the same directory needs no inner calls.
  ScriptedBackend cold = make_backend(fx, 1.0, 0.0);
  ResponseCache reopened = ResponseCache::open(dir);
  CachingBackend warm(cold, reopened);
  const auto warm_first = warm.generate("prompt-a", params, ctx);
  const auto warm_other = warm.generate("prompt-b", params, ctx);
  CHECK(cold.calls() == 0);
  CHECK(warm_first == first);
  CHECK(warm_other == other);
}

TEST_CASE("a parameter change defeats the cache") {
  const Fixture fx = make_fixture();
  const auto dir = testsup::temp_dir("cache-params");
  GenerateContext ctx{"p1", 11};
  ScriptedBackend inner = make_backend(fx, 1.0, 0.0);
  ResponseCache cache = ResponseCache::open(dir);
  CachingBackend caching(inner, cache);
  caching.generate("prompt", make_params(), ctx);
  CHECK(inner.calls() == 1);
  BackendParams hotter = make_params();
  hotter.temperature = 0.7;
  caching.generate("prompt", hotter, ctx);
  CHECK(inner.calls() == 2);
}
