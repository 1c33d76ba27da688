#include "selfalign/chrf.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <utility>

#include "selfalign/errors.hpp"
#include "selfalign/unicode.hpp"

namespace selfalign::chrf {

namespace {

// Decodes and throws EmptyTextError unless at least one codepoint is not
// whitespace.
std::u32string decode_nonempty(std::string_view text) {
  std::u32string decoded = unicode::decode_utf8(text);
  for (char32_t cp : decoded) {
    if (!unicode::is_whitespace(cp)) return decoded;
  }
  throw EmptyTextError("text has no non-whitespace content");
}

NgramCounts count_ngrams(const std::u32string& units, int n) {
  NgramCounts counts;
  if (n < 1 || units.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    ++counts[units.substr(i, n)];
  }
  return counts;
}

std::u32string strip_whitespace(const std::u32string& text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (!unicode::is_whitespace(cp)) out.push_back(cp);
  }
  return out;
}

std::vector<std::u32string> tokenize(const std::u32string& text) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t cp : text) {
    if (unicode::is_whitespace(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (unicode::is_punct(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      tokens.push_back(std::u32string(1, cp));
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

NgramCounts count_token_ngrams(const std::vector<std::u32string>& tokens, int n) {
  NgramCounts counts;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::u32string key = tokens[i];
    for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
      key.push_back(kTokenSep);
      key.append(tokens[i + j]);
    }
    ++counts[std::move(key)];
  }
  return counts;
}

long long total_count(const NgramCounts& counts) {
  long long total = 0;
  for (const auto& [gram, count] : counts) total += count;
  return total;
}

// Size of the clipped multiset intersection.
long long overlap(const NgramCounts& a, const NgramCounts& b) {
  const NgramCounts& small = a.size() <= b.size() ? a : b;
  const NgramCounts& large = a.size() <= b.size() ? b : a;
  long long shared = 0;
  for (const auto& [gram, count] : small) {
    auto it = large.find(gram);
    if (it != large.end()) shared += std::min(count, it->second);
  }
  return shared;
}

// Accumulates one order into the running score. Orders where both sides have
// zero n-grams are skipped entirely.
void accumulate_order(const NgramCounts& hyp, long long hyp_total,
                      const NgramCounts& ref, long long ref_total, double beta,
                      double* f_sum, int* orders_used) {
  if (hyp_total == 0 && ref_total == 0) return;
  const long long shared = overlap(hyp, ref);
  const double precision =
      hyp_total > 0 ? static_cast<double>(shared) / static_cast<double>(hyp_total) : 0.0;
  const double recall =
      ref_total > 0 ? static_cast<double>(shared) / static_cast<double>(ref_total) : 0.0;
  double f = 0.0;
  if (precision + recall > 0.0) {
    const double beta_sq = beta * beta;
    f = (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall);
  }
  *f_sum += f;
  ++*orders_used;
}

NgramProfile build_profile(const std::u32string& decoded, const ChrfConfig& cfg) {
  NgramProfile profile;
  const std::u32string char_units =
      cfg.strip_whitespace_for_char_ngrams ? strip_whitespace(decoded) : decoded;
  profile.char_grams.reserve(cfg.max_char_order);
  profile.char_totals.reserve(cfg.max_char_order);
  for (int n = 1; n <= cfg.max_char_order; ++n) {
    profile.char_grams.push_back(count_ngrams(char_units, n));
    profile.char_totals.push_back(total_count(profile.char_grams.back()));
  }
  const std::vector<std::u32string> tokens = tokenize(decoded);
  profile.word_grams.reserve(cfg.max_word_order);
  profile.word_totals.reserve(cfg.max_word_order);
  for (int n = 1; n <= cfg.max_word_order; ++n) {
    profile.word_grams.push_back(count_token_ngrams(tokens, n));
    profile.word_totals.push_back(total_count(profile.word_grams.back()));
  }
  return profile;
}

}  // namespace

void ChrfConfig::validate() const {
  if (max_char_order < 1) {
    throw ConfigError("max_char_order must be at least 1");
  }
  if (max_word_order < 0) {
    throw ConfigError("max_word_order must not be negative");
  }
  if (!(beta > 0.0)) {
    throw ConfigError("beta must be positive");
  }
}

NgramCounts char_ngrams(std::string_view text, int n, bool strip) {
  std::u32string decoded = unicode::decode_utf8(text);
  if (strip) decoded = strip_whitespace(decoded);
  return count_ngrams(decoded, n);
}

std::vector<std::u32string> tokenize_words(std::string_view text) {
  return tokenize(unicode::decode_utf8(text));
}

NgramCounts word_ngrams(std::string_view text, int n) {
  return count_token_ngrams(tokenize_words(text), n);
}

NgramProfile NgramProfile::build(std::string_view text, const ChrfConfig& cfg) {
  cfg.validate();
  return build_profile(unicode::decode_utf8(text), cfg);
}

double chrf_pp(std::string_view hypothesis, std::string_view reference,
               const ChrfConfig& cfg) {
  cfg.validate();
  const NgramProfile hyp = build_profile(decode_nonempty(hypothesis), cfg);
  const NgramProfile ref = build_profile(decode_nonempty(reference), cfg);
  return chrf_pp(hyp, ref, cfg);
}

double chrf_pp(const NgramProfile& hypothesis, const NgramProfile& reference,
               const ChrfConfig& cfg) {
  const auto char_orders = static_cast<std::size_t>(cfg.max_char_order);
  const auto word_orders = static_cast<std::size_t>(cfg.max_word_order);
  if (hypothesis.char_grams.size() != char_orders ||
      reference.char_grams.size() != char_orders ||
      hypothesis.word_grams.size() != word_orders ||
      reference.word_grams.size() != word_orders) {
    throw std::invalid_argument("n-gram profiles were built with a different config");
  }
  double f_sum = 0.0;
  int orders_used = 0;
  for (std::size_t i = 0; i < char_orders; ++i) {
    accumulate_order(hypothesis.char_grams[i], hypothesis.char_totals[i],
                     reference.char_grams[i], reference.char_totals[i], cfg.beta,
                     &f_sum, &orders_used);
  }
  for (std::size_t i = 0; i < word_orders; ++i) {
    accumulate_order(hypothesis.word_grams[i], hypothesis.word_totals[i],
                     reference.word_grams[i], reference.word_totals[i], cfg.beta,
                     &f_sum, &orders_used);
  }
  if (orders_used == 0) return 0.0;
  return f_sum / static_cast<double>(orders_used);
}

NgramProfileCache::NgramProfileCache(const ProbeSet& probes, ChrfConfig cfg)
    : cfg_(cfg) {
  cfg_.validate();
  for (const Probe& probe : probes.all()) {
    profiles_.emplace(probe.probe_id, NgramProfile::build(probe.template_text, cfg_));
  }
}

const NgramProfile* NgramProfileCache::find(const std::string& probe_id) const {
  auto it = profiles_.find(probe_id);
  return it == profiles_.end() ? nullptr : &it->second;
}

std::vector<RankedProbe> rank_by_chrf(const Probe& query,
                                      const std::vector<const Probe*>& pool,
                                      const ChrfConfig& cfg, std::size_t k,
                                      const NgramProfileCache* cache) {
  cfg.validate();
  if (k > pool.size()) {
    throw InsufficientPoolError("cannot rank " + std::to_string(k) +
                                " probes from a pool of " +
                                std::to_string(pool.size()));
  }
  // Profiles missing from the cache are built locally; a deque keeps the
  // returned references stable across insertions.
  std::deque<NgramProfile> local;
  auto profile_for = [&](const Probe& probe) -> const NgramProfile& {
    if (cache != nullptr) {
      if (const NgramProfile* found = cache->find(probe.probe_id)) return *found;
    }
    local.push_back(NgramProfile::build(probe.template_text, cfg));
    return local.back();
  };

  const NgramProfile query_profile = NgramProfile::build(query.template_text, cfg);
  std::vector<RankedProbe> ranked;
  ranked.reserve(pool.size());
  for (const Probe* candidate : pool) {
    if (candidate == nullptr) {
      throw std::invalid_argument("candidate pool contains a null probe");
    }
    if (candidate->probe_id == query.probe_id) {
      throw std::invalid_argument("candidate pool must not contain the query probe");
    }
    ranked.push_back({candidate, chrf_pp(query_profile, profile_for(*candidate), cfg)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedProbe& a, const RankedProbe& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.probe->probe_id < b.probe->probe_id;
  });
  ranked.resize(k);
  return ranked;
}

}  // namespace selfalign::chrf
