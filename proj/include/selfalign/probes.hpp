#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selfalign {

/// One of the two answer options of a probe.
enum class AnswerOption { kOptionA, kOptionB };

constexpr AnswerOption other_option(AnswerOption opt) {
  return opt == AnswerOption::kOptionA ? AnswerOption::kOptionB
                                       : AnswerOption::kOptionA;
}

// ---------------------------------------------------------------------------
// Category taxonomy
// ---------------------------------------------------------------------------

struct Category {
  int index;
  std::string_view name;
};

/// The 13 survey categories; indices 4 and 8 exist here for naming but are
/// not admitted in probe files.
const std::vector<Category>& category_catalog();

/// True for the 11 admitted category indices (4 and 8 are rejected).
bool category_admitted(int index);

/// Canonical title for a category index; throws LoadError on unknown index.
std::string_view category_name(int index);

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

/// A cloze-style cultural value question with exactly two answer options.
/// The template carries a single "_" blank marker.
struct Probe {
  std::string probe_id;
  std::string question_id;
  std::string language;  // ISO 639-1
  int category_index = 0;
  std::string template_text;
  std::string option_a;
  std::string option_b;

  const std::string& option_text(AnswerOption opt) const {
    return opt == AnswerOption::kOptionA ? option_a : option_b;
  }
};

/// Number of "_" blank markers in a template.
std::size_t count_blank_markers(std::string_view template_text);

/// Validates a probe's invariants; throws LoadError naming the violation.
void validate_probe(const Probe& probe);

/// Immutable collection of probes with id and per-language access.
class ProbeSet {
 public:
  void add(Probe probe);  // throws LoadError on duplicate probe_id

  std::size_t size() const { return probes_.size(); }
  bool empty() const { return probes_.empty(); }
  const std::vector<Probe>& all() const { return probes_; }

  const Probe* find(std::string_view probe_id) const;

  /// Probes of one language, sorted by probe_id.
  std::vector<const Probe*> for_language(std::string_view language) const;

  /// Distinct languages present, sorted.
  std::vector<std::string> languages() const;

 private:
  std::vector<Probe> probes_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Loads a UTF-8 JSON-lines probe file. Each record carries probe_id,
/// question_id, language, category_index, template, option_a, option_b.
/// Malformed records, duplicate ids and excluded categories fail the load
/// with the offending line number. An empty file yields an empty set and a
/// warning.
ProbeSet load_probes(const std::filesystem::path& path,
                     std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Survey distributions and majorities
// ---------------------------------------------------------------------------

/// Per-country response shares of one survey question on a Likert scale.
struct LikertDistribution {
  enum class Orientation { kLowIsOptionA, kLowIsOptionB };

  std::string question_id;
  std::string country;
  int scale_size = 0;
  std::vector<double> shares;  // one fraction per scale point, sums to 1
  Orientation orientation = Orientation::kLowIsOptionA;
};

/// The binary majority derived from a Likert distribution.
struct SurveyMajority {
  std::string question_id;
  std::string country;
  AnswerOption majority = AnswerOption::kOptionA;
  double majority_share = 0.0;  // in (0.5, 1.0]
};

/// Collapses a Likert distribution to a binary majority. Even scales split
/// into halves; odd scales drop the midpoint and renormalize. Throws
/// TieError when the aggregated halves are equal (no alignment target).
SurveyMajority aggregate_majority(const LikertDistribution& dist);

/// Survey records keyed by (question_id, country).
class SurveyTable {
 public:
  using Key = std::pair<std::string, std::string>;

  void add(LikertDistribution dist);  // throws LoadError on duplicate key

  std::size_t size() const { return entries_.size(); }
  const std::map<Key, LikertDistribution>& entries() const { return entries_; }
  const LikertDistribution* lookup(std::string_view question_id,
                                   std::string_view country) const;

 private:
  std::map<Key, LikertDistribution> entries_;
};

/// Loads a UTF-8 JSON-lines survey file with fields question_id, country,
/// scale_size, shares, orientation. Shares must be nonnegative and sum to 1
/// within 1e-6; keys must be unique.
SurveyTable load_survey(const std::filesystem::path& path);

/// Why a (question_id, country) pair has no majority.
enum class MajorityGap { kNotInSurvey, kTie };

/// Precomputed majorities for a survey table. Tied questions are excluded
/// with a notice and reported as gaps, never silently dropped.
class MajorityTable {
 public:
  static MajorityTable build(const SurveyTable& survey,
                             std::vector<std::string>* notices = nullptr);

  std::optional<SurveyMajority> lookup(std::string_view question_id,
                                       std::string_view country) const;

  /// Reason the pair is absent from lookup().
  MajorityGap gap(std::string_view question_id,
                  std::string_view country) const;

  std::size_t size() const { return majorities_.size(); }

 private:
  std::map<SurveyTable::Key, SurveyMajority> majorities_;
  std::map<SurveyTable::Key, MajorityGap> ties_;
};

// ---------------------------------------------------------------------------
// Language to country mapping
// ---------------------------------------------------------------------------

/// Maps ISO 639-1 language codes to the country whose survey answers the
/// language is evaluated against.
class LanguageCountryMap {
 public:
  /// The default 14-language mapping shipped with the harness.
  static LanguageCountryMap builtin();

  /// Loads a two-column CSV with header "language,country".
  static LanguageCountryMap load(const std::filesystem::path& path);

  /// Throws UnmappedLanguageError when the language has no entry.
  const std::string& country_for(std::string_view language) const;

  bool contains(std::string_view language) const;
  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace selfalign
