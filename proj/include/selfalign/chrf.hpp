#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selfalign/probes.hpp"

namespace selfalign::chrf {

/// Parameters of the character/word n-gram F-score. The defaults follow the
/// common convention for this metric: character orders 1..6, word orders 1..2,
/// recall-weighted F with beta = 2, whitespace excluded from character
/// n-grams, case-sensitive.
struct ChrfConfig {
  int max_char_order = 6;
  int max_word_order = 2;
  double beta = 2.0;
  bool strip_whitespace_for_char_ngrams = true;

  /// Throws ConfigError unless max_char_order >= 1, max_word_order >= 0 and
  /// beta > 0.
  void validate() const;
};

/// Multiset of n-grams with positive multiplicities. Word n-grams are encoded
/// as their tokens joined by kTokenSep, so one map type serves both kinds.
using NgramCounts = std::unordered_map<std::u32string, int>;

/// Joins the tokens of a word n-gram inside a map key. The value lies one
/// past the Unicode scalar range, so it can never collide with text content.
inline constexpr char32_t kTokenSep = 0x110000;

/// Returns all contiguous length-n codepoint substrings of `text` with
/// multiplicities; empty when the (optionally whitespace-stripped) text is
/// shorter than n.
NgramCounts char_ngrams(std::string_view text, int n, bool strip_whitespace = true);

/// Splits `text` on whitespace, with every punctuation codepoint becoming its
/// own single-codepoint token.
std::vector<std::u32string> tokenize_words(std::string_view text);

/// Returns all contiguous token n-grams of `text` with multiplicities; empty
/// when the text has fewer than n tokens.
NgramCounts word_ngrams(std::string_view text, int n);

/// Pre-counted n-grams of one text for every configured order. Index i of
/// each vector holds order i + 1; totals are the sums of multiplicities.
struct NgramProfile {
  std::vector<NgramCounts> char_grams;
  std::vector<long long> char_totals;
  std::vector<NgramCounts> word_grams;
  std::vector<long long> word_totals;

  static NgramProfile build(std::string_view text, const ChrfConfig& cfg = {});
};

/// Character/word n-gram F-score of `hypothesis` against `reference` in
/// [0, 1]. Per order: precision = clipped overlap / hypothesis count, recall
/// = clipped overlap / reference count, F = (1 + beta^2) * P * R /
/// (beta^2 * P + R) with F = 0 when P + R = 0; orders where both texts have
/// zero n-grams are skipped; the score is the arithmetic mean of F over the
/// remaining orders. Throws EmptyTextError when either text has no
/// non-whitespace codepoint.
double chrf_pp(std::string_view hypothesis, std::string_view reference,
               const ChrfConfig& cfg = {});

/// Same score computed from prebuilt profiles. Both profiles must have been
/// built with `cfg` (order counts are checked; throws std::invalid_argument
/// on mismatch). The emptiness check is the callers' responsibility here.
double chrf_pp(const NgramProfile& hypothesis, const NgramProfile& reference,
               const ChrfConfig& cfg = {});

/// Profiles of every probe template in a set, built once and then read-only;
/// safe to share across threads after construction.
class NgramProfileCache {
 public:
  NgramProfileCache(const ProbeSet& probes, ChrfConfig cfg = {});

  const ChrfConfig& config() const { return cfg_; }

  /// Returns the profile for `probe_id`, or nullptr when the probe was not in
  /// the set the cache was built from.
  const NgramProfile* find(const std::string& probe_id) const;

 private:
  ChrfConfig cfg_;
  std::unordered_map<std::string, NgramProfile> profiles_;
};

struct RankedProbe {
  const Probe* probe = nullptr;
  double score = 0.0;
};

/// Scores every pool candidate against `query` and returns the top k, sorted
/// by descending score with ties broken by ascending probe_id. The pool must
/// not contain the query itself (std::invalid_argument). Throws
/// InsufficientPoolError when k > pool size. When `cache` is given, profiles
/// are taken from it (and built on the fly for probes it does not know).
std::vector<RankedProbe> rank_by_chrf(const Probe& query,
                                      const std::vector<const Probe*>& pool,
                                      const ChrfConfig& cfg, std::size_t k,
                                      const NgramProfileCache* cache = nullptr);

}  // namespace selfalign::chrf
