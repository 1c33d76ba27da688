#include <doctest.h>

#include <string>
#include <vector>

#include "selfalign/errors.hpp"
#include "selfalign/probes.hpp"
#include "support.hpp"

namespace {

using namespace selfalign;

Probe make_probe(const std::string& id) {
  Probe probe;
  probe.probe_id = id;
  probe.question_id = "Q-" + id;
  probe.language = "en";
  probe.category_index = 1;
  probe.template_text = "Something is _ to me.";
  probe.option_a = "important";
  probe.option_b = "unimportant";
  return probe;
}

LikertDistribution make_dist(int scale, std::vector<double> shares,
                             LikertDistribution::Orientation orientation) {
  LikertDistribution dist;
  dist.question_id = "Q1";
  dist.country = "United States";
  dist.scale_size = scale;
  dist.shares = std::move(shares);
  dist.orientation = orientation;
  return dist;
}

constexpr auto kLowA = LikertDistribution::Orientation::kLowIsOptionA;
constexpr auto kLowB = LikertDistribution::Orientation::kLowIsOptionB;

}  // namespace

TEST_CASE("shipped probe corpus loads completely") {
  std::vector<std::string> warnings;
  const ProbeSet probes =
      load_probes(testsup::kDataDir / "probes_en.jsonl", &warnings);
  CHECK(probes.size() == 237);
  CHECK(warnings.empty());
  CHECK(probes.languages() == std::vector<std::string>{"en"});
  CHECK(probes.for_language("en").size() == 237);
  const Probe* first = probes.find("en-001");
  REQUIRE(first != nullptr);
  CHECK(first->template_text == "Family is _ to me.");
  CHECK(first->option_text(AnswerOption::kOptionA) == "important");
  CHECK(first->option_text(AnswerOption::kOptionB) == "unimportant");
}

TEST_CASE("probe validation rejects the excluded categories") {
  for (int index : {4, 8, 0, 14, -1}) {
    Probe probe = make_probe("bad-category");
    probe.category_index = index;
    CHECK_THROWS_AS(validate_probe(probe), LoadError);
  }
  for (int index : {1, 2, 3, 5, 6, 7, 9, 10, 11, 12, 13}) {
    Probe probe = make_probe("good-category");
    probe.category_index = index;
    CHECK_NOTHROW(validate_probe(probe));
  }
}

TEST_CASE("probe validation requires exactly one blank marker") {
  Probe two = make_probe("two-blanks");
  two.template_text = "It is _ and _ here.";
  CHECK_THROWS_AS(validate_probe(two), LoadError);
  Probe none = make_probe("no-blank");
  none.template_text = "It is fine here.";
  CHECK_THROWS_AS(validate_probe(none), LoadError);
}

TEST_CASE("probe validation rejects degenerate options and bad UTF-8") {
  Probe same = make_probe("same-options");
  same.option_b = same.option_a;
  CHECK_THROWS_AS(validate_probe(same), LoadError);
  Probe blank_option = make_probe("blank-option");
  blank_option.option_b = "  ";
  CHECK_THROWS_AS(validate_probe(blank_option), LoadError);
  Probe bad_utf8 = make_probe("bad-utf8");
  bad_utf8.template_text = "Broken \xC3 byte is _ here.";
  CHECK_THROWS_AS(validate_probe(bad_utf8), Utf8Error);
}

TEST_CASE("loader reports the offending line") {
  const auto dir = testsup::temp_dir("probe-lines");
  const std::string good =
      R"({"probe_id":"p1","question_id":"Q1","language":"en","category_index":1,)"
      R"("template":"A is _ to me.","option_a":"x","option_b":"y"})";
  const std::string bad =
      R"({"probe_id":"p2","question_id":"Q2","language":"en","category_index":1,)"
      R"("template":"B is _ and _ to me.","option_a":"x","option_b":"y"})";
  testsup::write_file(dir / "probes.jsonl", good + "\n" + bad + "\n");
  try {
    load_probes(dir / "probes.jsonl", nullptr);
    FAIL("expected LoadError");
  } catch (const LoadError& err) {
    const std::string what = err.what();
    CHECK(what.find(":2:") != std::string::npos);
    CHECK(what.find("blank markers") != std::string::npos);
  }
}

TEST_CASE("loader flags duplicate probe ids") {
  const auto dir = testsup::temp_dir("probe-dupes");
  const std::string row =
      R"({"probe_id":"p1","question_id":"Q1","language":"en","category_index":1,)"
      R"("template":"A is _ to me.","option_a":"x","option_b":"y"})";
  testsup::write_file(dir / "probes.jsonl", row + "\n" + row + "\n");
  CHECK_THROWS_AS(load_probes(dir / "probes.jsonl", nullptr), LoadError);
}

TEST_CASE("empty probe file warns instead of failing") {
  const auto dir = testsup::temp_dir("probe-empty");
  testsup::write_file(dir / "probes.jsonl", "\n   \n");
  std::vector<std::string> warnings;
  const ProbeSet probes = load_probes(dir / "probes.jsonl", &warnings);
  CHECK(probes.empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("no probes loaded") != std::string::npos);
}

TEST_CASE("ten-point scale splits into low and high halves") {
  // 1-5 carry 0.6 of the mass, 6-10 carry 0.4.
  const std::vector<double> shares = {0.12, 0.12, 0.12, 0.12, 0.12,
                                      0.08, 0.08, 0.08, 0.08, 0.08};
  const SurveyMajority low_a = aggregate_majority(make_dist(10, shares, kLowA));
  CHECK(low_a.majority == AnswerOption::kOptionA);
  CHECK(low_a.majority_share == doctest::Approx(0.6).epsilon(1e-12));
  // Same numbers, opposite orientation: the majority flips.
  const SurveyMajority low_b = aggregate_majority(make_dist(10, shares, kLowB));
  CHECK(low_b.majority == AnswerOption::kOptionB);
  CHECK(low_b.majority_share == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("two-point scale is a direct vote") {
  const SurveyMajority majority =
      aggregate_majority(make_dist(2, {0.7, 0.3}, kLowA));
  CHECK(majority.majority == AnswerOption::kOptionA);
  CHECK(majority.majority_share == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("odd scales drop the midpoint and renormalize") {
  // Low 0.45, midpoint 0.2, high 0.35: majority share 0.45 / 0.8.
  const SurveyMajority majority =
      aggregate_majority(make_dist(5, {0.35, 0.1, 0.2, 0.05, 0.3}, kLowA));
  CHECK(majority.majority == AnswerOption::kOptionA);
  CHECK(majority.majority_share == doctest::Approx(0.5625).epsilon(1e-12));
  // The midpoint alone decides nothing: all mass at the midpoint is a tie.
  CHECK_THROWS_AS(
      aggregate_majority(make_dist(3, {0.0, 1.0, 0.0}, kLowA)), TieError);
}

TEST_CASE("tied halves raise TieError") {
  CHECK_THROWS_AS(
      aggregate_majority(make_dist(5, {0.2, 0.2, 0.2, 0.2, 0.2}, kLowA)),
      TieError);
  CHECK_THROWS_AS(aggregate_majority(make_dist(2, {0.5, 0.5}, kLowA)),
                  TieError);
}

TEST_CASE("majority share is always in (0.5, 1]") {
  const std::vector<LikertDistribution> cases = {
      make_dist(10, {0.12, 0.12, 0.12, 0.12, 0.12, 0.08, 0.08, 0.08, 0.08, 0.08},
                kLowA),
      make_dist(4, {0.4, 0.35, 0.15, 0.1}, kLowB),
      make_dist(5, {0.35, 0.1, 0.2, 0.05, 0.3}, kLowA),
      make_dist(2, {0.01, 0.99}, kLowB),
      make_dist(2, {1.0, 0.0}, kLowA),
  };
  for (const auto& dist : cases) {
    const SurveyMajority majority = aggregate_majority(dist);
    CHECK(majority.majority_share > 0.5);
    CHECK(majority.majority_share <= 1.0);
  }
}

TEST_CASE("shipped survey covers every probe with a clean majority") {
  const SurveyTable survey = load_survey(testsup::kDataDir / "survey_us.jsonl");
  CHECK(survey.size() == 237);
  std::vector<std::string> notices;
  const MajorityTable majorities = MajorityTable::build(survey, &notices);
  CHECK(majorities.size() == 237);
  CHECK(notices.empty());
  const ProbeSet probes =
      load_probes(testsup::kDataDir / "probes_en.jsonl", nullptr);
  for (const Probe* probe : probes.for_language("en")) {
    CHECK(majorities.lookup(probe->question_id, "United States").has_value());
  }
}

TEST_CASE("survey loader rejects malformed rows") {
  const auto dir = testsup::temp_dir("survey-bad");
  const auto path = dir / "survey.jsonl";

  SUBCASE("shares sum far from one") {
    testsup::write_file(path,
                        R"({"question_id":"Q1","country":"X","scale_size":2,)"
                        R"("shares":[0.6,0.6],"orientation":"low_is_option_a"})"
                        "\n");
    CHECK_THROWS_AS(load_survey(path), LoadError);
  }
  SUBCASE("shares length mismatch") {
    testsup::write_file(path,
                        R"({"question_id":"Q1","country":"X","scale_size":4,)"
                        R"("shares":[0.5,0.5],"orientation":"low_is_option_a"})"
                        "\n");
    CHECK_THROWS_AS(load_survey(path), LoadError);
  }
  SUBCASE("unknown orientation") {
    testsup::write_file(path,
                        R"({"question_id":"Q1","country":"X","scale_size":2,)"
                        R"("shares":[0.6,0.4],"orientation":"sideways"})"
                        "\n");
    CHECK_THROWS_AS(load_survey(path), LoadError);
  }
  SUBCASE("duplicate question/country pair") {
    const std::string row =
        R"({"question_id":"Q1","country":"X","scale_size":2,)"
        R"("shares":[0.6,0.4],"orientation":"low_is_option_a"})";
    testsup::write_file(path, row + "\n" + row + "\n");
    CHECK_THROWS_AS(load_survey(path), LoadError);
  }
}

TEST_CASE("majority table records ties as gaps") {
  const auto dir = testsup::temp_dir("survey-ties");
  const auto path = dir / "survey.jsonl";
  testsup::write_file(
      path,
      R"({"question_id":"Q1","country":"X","scale_size":2,)"
      R"("shares":[0.5,0.5],"orientation":"low_is_option_a"})"
      "\n"
      R"({"question_id":"Q2","country":"X","scale_size":2,)"
      R"("shares":[0.8,0.2],"orientation":"low_is_option_a"})"
      "\n");
  const SurveyTable survey = load_survey(path);
  std::vector<std::string> notices;
  const MajorityTable majorities = MajorityTable::build(survey, &notices);
  CHECK(majorities.size() == 1);
  REQUIRE(notices.size() == 1);
  CHECK(notices[0].find("Q1") != std::string::npos);
  CHECK_FALSE(majorities.lookup("Q1", "X").has_value());
  CHECK(majorities.gap("Q1", "X") == MajorityGap::kTie);
  CHECK(majorities.gap("Q3", "X") == MajorityGap::kNotInSurvey);
  CHECK(majorities.lookup("Q2", "X").has_value());
}

TEST_CASE("builtin language mapping") {
  const LanguageCountryMap mapping = LanguageCountryMap::builtin();
  CHECK(mapping.entries().size() == 14);
  CHECK(mapping.country_for("en") == "United States");
  CHECK(mapping.country_for("ko") == "South Korea");
  CHECK(mapping.country_for("el") == "Greece");
  CHECK(mapping.contains("bn"));
  CHECK_FALSE(mapping.contains("xx"));
  CHECK_THROWS_AS(mapping.country_for("xx"), UnmappedLanguageError);
}

TEST_CASE("shipped mapping file equals the builtin table") {
  const LanguageCountryMap loaded =
      LanguageCountryMap::load(testsup::kDataDir / "language_country.csv");
  CHECK(loaded.entries() == LanguageCountryMap::builtin().entries());
}

TEST_CASE("mapping loader enforces its header") {
  const auto dir = testsup::temp_dir("mapping-bad");
  testsup::write_file(dir / "map.csv", "lang,nation\nen,United States\n");
  CHECK_THROWS_AS(LanguageCountryMap::load(dir / "map.csv"), LoadError);
}
