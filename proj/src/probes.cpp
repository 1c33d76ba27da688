#include "selfalign/probes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "selfalign/errors.hpp"
#include "selfalign/unicode.hpp"

namespace selfalign {
namespace {

using json = nlohmann::json;

constexpr double kShareSumTolerance = 1e-6;
constexpr double kTieTolerance = 1e-12;

std::string trimmed(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

[[noreturn]] void fail_line(const std::filesystem::path& path,
                            std::size_t line_no, const std::string& why) {
  throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + why);
}

std::string require_string(const json& record, const char* field,
                           const std::filesystem::path& path,
                           std::size_t line_no) {
  if (!record.contains(field) || !record.at(field).is_string()) {
    fail_line(path, line_no,
              std::string("missing or non-string field \"") + field + "\"");
  }
  return record.at(field).get<std::string>();
}

void emit_warning(std::vector<std::string>* warnings, std::string message) {
  if (warnings != nullptr) {
    warnings->push_back(std::move(message));
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Category taxonomy
// ---------------------------------------------------------------------------

const std::vector<Category>& category_catalog() {
  static const std::vector<Category> kCatalog = {
      {1, "Social Values, Attitudes and Stereotypes"},
      {2, "Happiness and Well-being"},
      {3, "Social Capital, Trust and Organisational Membership"},
      {4, "Economic Values"},
      {5, "Corruption"},
      {6, "Migration"},
      {7, "Security"},
      {8, "Post-materialist Index"},
      {9, "Science and Technology"},
      {10, "Religious Values"},
      {11, "Ethical Values and Norms"},
      {12, "Political Interest and Political Participation"},
      {13, "Political Culture and Regimes"},
  };
  return kCatalog;
}

bool category_admitted(int index) {
  return index >= 1 && index <= 13 && index != 4 && index != 8;
}

std::string_view category_name(int index) {
  for (const auto& category : category_catalog()) {
    if (category.index == index) {
      return category.name;
    }
  }
  throw LoadError("unknown category index " + std::to_string(index));
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

std::size_t count_blank_markers(std::string_view template_text) {
  // '_' is ASCII 0x5F and never occurs inside a UTF-8 multibyte sequence,
  // so a byte scan is exact.
  return static_cast<std::size_t>(
      std::count(template_text.begin(), template_text.end(), '_'));
}

void validate_probe(const Probe& probe) {
  if (probe.probe_id.empty()) {
    throw LoadError("probe has empty probe_id");
  }
  const std::string where = "probe \"" + probe.probe_id + "\": ";
  if (probe.question_id.empty()) {
    throw LoadError(where + "empty question_id");
  }
  if (probe.language.empty()) {
    throw LoadError(where + "empty language");
  }
  if (!category_admitted(probe.category_index)) {
    throw LoadError(where + "category index " +
                    std::to_string(probe.category_index) +
                    " is not one of the 11 admitted categories");
  }
  const std::size_t blanks = count_blank_markers(probe.template_text);
  if (blanks != 1) {
    throw LoadError(where + "template has " + std::to_string(blanks) +
                    " blank markers, expected exactly 1");
  }
  const std::string a = trimmed(probe.option_a);
  const std::string b = trimmed(probe.option_b);
  if (a.empty() || b.empty()) {
    throw LoadError(where + "answer options must be non-empty");
  }
  if (a == b) {
    throw LoadError(where + "answer options must differ");
  }
  // Reject malformed UTF-8 up front so downstream text handling never sees it.
  unicode::decode_utf8(probe.template_text);
  unicode::decode_utf8(probe.option_a);
  unicode::decode_utf8(probe.option_b);
}

void ProbeSet::add(Probe probe) {
  validate_probe(probe);
  auto [it, inserted] = by_id_.emplace(probe.probe_id, probes_.size());
  if (!inserted) {
    throw LoadError("duplicate probe_id \"" + probe.probe_id + "\"");
  }
  probes_.push_back(std::move(probe));
}

const Probe* ProbeSet::find(std::string_view probe_id) const {
  const auto it = by_id_.find(std::string(probe_id));
  return it == by_id_.end() ? nullptr : &probes_[it->second];
}

std::vector<const Probe*> ProbeSet::for_language(
    std::string_view language) const {
  std::vector<const Probe*> out;
  for (const auto& probe : probes_) {
    if (probe.language == language) {
      out.push_back(&probe);
    }
  }
  std::sort(out.begin(), out.end(), [](const Probe* a, const Probe* b) {
    return a->probe_id < b->probe_id;
  });
  return out;
}

std::vector<std::string> ProbeSet::languages() const {
  std::set<std::string> seen;
  for (const auto& probe : probes_) {
    seen.insert(probe.language);
  }
  return {seen.begin(), seen.end()};
}

ProbeSet load_probes(const std::filesystem::path& path,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open probe file: " + path.string());
  }
  ProbeSet probes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      fail_line(path, line_no, std::string("invalid JSON: ") + ex.what());
    }
    Probe probe;
    probe.probe_id = require_string(record, "probe_id", path, line_no);
    probe.question_id = require_string(record, "question_id", path, line_no);
    probe.language = require_string(record, "language", path, line_no);
    if (!record.contains("category_index") ||
        !record.at("category_index").is_number_integer()) {
      fail_line(path, line_no, "missing or non-integer field \"category_index\"");
    }
    probe.category_index = record.at("category_index").get<int>();
    probe.template_text = require_string(record, "template", path, line_no);
    probe.option_a = require_string(record, "option_a", path, line_no);
    probe.option_b = require_string(record, "option_b", path, line_no);
    try {
      probes.add(std::move(probe));
    } catch (const LoadError& ex) {
      fail_line(path, line_no, ex.what());
    }
  }
  if (probes.empty()) {
    emit_warning(warnings, "no probes loaded from " + path.string());
  }
  return probes;
}

// ---------------------------------------------------------------------------
// Survey distributions and majorities
// ---------------------------------------------------------------------------

SurveyMajority aggregate_majority(const LikertDistribution& dist) {
  const std::size_t scale = dist.shares.size();
  if (dist.scale_size < 2 ||
      scale != static_cast<std::size_t>(dist.scale_size)) {
    throw LoadError("survey record " + dist.question_id + "/" + dist.country +
                    ": shares length does not match scale_size");
  }
  for (double share : dist.shares) {
    if (share < 0.0) {
      throw LoadError("survey record " + dist.question_id + "/" +
                      dist.country + ": negative share");
    }
  }
  double low = 0.0;
  double high = 0.0;
  if (scale % 2 == 0) {
    for (std::size_t i = 0; i < scale / 2; ++i) {
      low += dist.shares[i];
    }
    for (std::size_t i = scale / 2; i < scale; ++i) {
      high += dist.shares[i];
    }
  } else {
    // Odd scale: the midpoint carries no allegiance to either end; drop it
    // and renormalize over the remaining mass.
    const std::size_t mid = scale / 2;
    for (std::size_t i = 0; i < mid; ++i) {
      low += dist.shares[i];
    }
    for (std::size_t i = mid + 1; i < scale; ++i) {
      high += dist.shares[i];
    }
  }
  const bool low_is_a =
      dist.orientation == LikertDistribution::Orientation::kLowIsOptionA;
  const double votes_a = low_is_a ? low : high;
  const double votes_b = low_is_a ? high : low;
  const double total = votes_a + votes_b;
  if (total <= 0.0 || std::abs(votes_a - votes_b) <= kTieTolerance) {
    throw TieError("no majority for " + dist.question_id + "/" + dist.country +
                   ": aggregated halves are tied");
  }
  SurveyMajority majority;
  majority.question_id = dist.question_id;
  majority.country = dist.country;
  majority.majority = votes_a > votes_b ? AnswerOption::kOptionA
                                        : AnswerOption::kOptionB;
  majority.majority_share = std::max(votes_a, votes_b) / total;
  return majority;
}

void SurveyTable::add(LikertDistribution dist) {
  Key key{dist.question_id, dist.country};
  auto [it, inserted] = entries_.emplace(std::move(key), std::move(dist));
  if (!inserted) {
    throw LoadError("duplicate survey key (" + it->first.first + ", " +
                    it->first.second + ")");
  }
}

const LikertDistribution* SurveyTable::lookup(std::string_view question_id,
                                              std::string_view country) const {
  const auto it =
      entries_.find(Key{std::string(question_id), std::string(country)});
  return it == entries_.end() ? nullptr : &it->second;
}

SurveyTable load_survey(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open survey file: " + path.string());
  }
  SurveyTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      fail_line(path, line_no, std::string("invalid JSON: ") + ex.what());
    }
    LikertDistribution dist;
    dist.question_id = require_string(record, "question_id", path, line_no);
    dist.country = require_string(record, "country", path, line_no);
    const std::string key =
        "(" + dist.question_id + ", " + dist.country + ")";
    if (!record.contains("scale_size") ||
        !record.at("scale_size").is_number_integer()) {
      fail_line(path, line_no, "missing or non-integer \"scale_size\"");
    }
    dist.scale_size = record.at("scale_size").get<int>();
    if (dist.scale_size < 2) {
      fail_line(path, line_no, key + ": scale_size must be at least 2");
    }
    if (!record.contains("shares") || !record.at("shares").is_array()) {
      fail_line(path, line_no, "missing or non-array \"shares\"");
    }
    for (const auto& value : record.at("shares")) {
      if (!value.is_number()) {
        fail_line(path, line_no, key + ": non-numeric share");
      }
      dist.shares.push_back(value.get<double>());
    }
    if (dist.shares.size() != static_cast<std::size_t>(dist.scale_size)) {
      fail_line(path, line_no,
                key + ": shares has " + std::to_string(dist.shares.size()) +
                    " entries, expected " + std::to_string(dist.scale_size));
    }
    double sum = 0.0;
    for (double share : dist.shares) {
      if (share < 0.0) {
        fail_line(path, line_no, key + ": negative share");
      }
      sum += share;
    }
    if (std::abs(sum - 1.0) > kShareSumTolerance) {
      std::ostringstream oss;
      oss << key << ": shares sum to " << sum << ", expected 1 within 1e-6";
      fail_line(path, line_no, oss.str());
    }
    const std::string orientation =
        require_string(record, "orientation", path, line_no);
    if (orientation == "low_is_option_a") {
      dist.orientation = LikertDistribution::Orientation::kLowIsOptionA;
    } else if (orientation == "low_is_option_b") {
      dist.orientation = LikertDistribution::Orientation::kLowIsOptionB;
    } else {
      fail_line(path, line_no,
                key + ": orientation must be low_is_option_a or "
                      "low_is_option_b");
    }
    try {
      table.add(std::move(dist));
    } catch (const LoadError& ex) {
      fail_line(path, line_no, ex.what());
    }
  }
  return table;
}

MajorityTable MajorityTable::build(const SurveyTable& survey,
                                   std::vector<std::string>* notices) {
  MajorityTable table;
  for (const auto& [key, dist] : survey.entries()) {
    try {
      table.majorities_.emplace(key, aggregate_majority(dist));
    } catch (const TieError& ex) {
      table.ties_.emplace(key, MajorityGap::kTie);
      emit_warning(notices, std::string(ex.what()) + "; probe excluded");
    }
  }
  return table;
}

std::optional<SurveyMajority> MajorityTable::lookup(
    std::string_view question_id, std::string_view country) const {
  const auto it = majorities_.find(
      SurveyTable::Key{std::string(question_id), std::string(country)});
  if (it == majorities_.end()) {
    return std::nullopt;
  }
  return it->second;
}

MajorityGap MajorityTable::gap(std::string_view question_id,
                               std::string_view country) const {
  const auto it = ties_.find(
      SurveyTable::Key{std::string(question_id), std::string(country)});
  return it == ties_.end() ? MajorityGap::kNotInSurvey : MajorityGap::kTie;
}

// ---------------------------------------------------------------------------
// Language to country mapping
// ---------------------------------------------------------------------------

LanguageCountryMap LanguageCountryMap::builtin() {
  LanguageCountryMap map;
  map.entries_ = {
      {"en", "United States"}, {"ro", "Romania"},     {"el", "Greece"},
      {"ur", "Pakistan"},      {"fa", "Iran"},        {"tl", "Philippines"},
      {"id", "Indonesia"},     {"de", "Germany"},     {"ms", "Malaysia"},
      {"bn", "Bangladesh"},    {"sr", "Serbia"},      {"tr", "Turkey"},
      {"vi", "Vietnam"},       {"ko", "South Korea"},
  };
  return map;
}

LanguageCountryMap LanguageCountryMap::load(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open mapping file: " + path.string());
  }
  LanguageCountryMap map;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trimmed(line).empty()) {
      continue;
    }
    if (!saw_header) {
      if (trimmed(line) != "language,country") {
        fail_line(path, line_no,
                  "expected header \"language,country\", got \"" + line + "\"");
      }
      saw_header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail_line(path, line_no, "expected two comma-separated columns");
    }
    const std::string language = trimmed(line.substr(0, comma));
    const std::string country = trimmed(line.substr(comma + 1));
    if (language.empty() || country.empty()) {
      fail_line(path, line_no, "empty language or country");
    }
    if (!map.entries_.emplace(language, country).second) {
      fail_line(path, line_no, "duplicate language \"" + language + "\"");
    }
  }
  if (!saw_header) {
    throw LoadError("mapping file is empty: " + path.string());
  }
  return map;
}

const std::string& LanguageCountryMap::country_for(
    std::string_view language) const {
  const auto it = entries_.find(std::string(language));
  if (it == entries_.end()) {
    throw UnmappedLanguageError("no country mapping for language \"" +
                                std::string(language) + "\"");
  }
  return it->second;
}

bool LanguageCountryMap::contains(std::string_view language) const {
  return entries_.count(std::string(language)) > 0;
}

}  // namespace selfalign
