#include "chrf_oracle.hpp"

#include <map>
#include <vector>

#include "selfalign/unicode.hpp"

namespace oracle {
namespace {

namespace uni = selfalign::unicode;

using Gram = std::vector<char32_t>;
using WordGram = std::vector<std::u32string>;

std::map<Gram, int> char_grams(const std::u32string& text, int n) {
  std::u32string kept;
  for (char32_t cp : text) {
    if (!uni::is_whitespace(cp)) kept.push_back(cp);
  }
  std::map<Gram, int> counts;
  for (std::size_t start = 0; start + n <= kept.size(); ++start) {
    Gram gram(kept.begin() + start, kept.begin() + start + n);
    counts[gram] += 1;
  }
  return counts;
}

std::vector<std::u32string> words(const std::u32string& text) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t cp : text) {
    if (uni::is_whitespace(cp)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else if (uni::is_punct(cp)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
      tokens.push_back(std::u32string(1, cp));
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

std::map<WordGram, int> word_grams(const std::vector<std::u32string>& tokens,
                                   int n) {
  std::map<WordGram, int> counts;
  for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
    WordGram gram(tokens.begin() + start, tokens.begin() + start + n);
    counts[gram] += 1;
  }
  return counts;
}

template <typename Map>
long long total(const Map& counts) {
  long long sum = 0;
  for (const auto& [gram, count] : counts) sum += count;
  return sum;
}

template <typename Map>
long long clipped_overlap(const Map& hyp, const Map& ref) {
  long long sum = 0;
  for (const auto& [gram, count] : hyp) {
    const auto it = ref.find(gram);
    if (it != ref.end()) sum += std::min(count, it->second);
  }
  return sum;
}

struct OrderScore {
  bool skipped = false;
  double f = 0.0;
};

template <typename Map>
OrderScore score_order(const Map& hyp, const Map& ref) {
  const long long hyp_total = total(hyp);
  const long long ref_total = total(ref);
  if (hyp_total == 0 && ref_total == 0) return {true, 0.0};
  const long long match = clipped_overlap(hyp, ref);
  const double precision =
      hyp_total > 0 ? static_cast<double>(match) / hyp_total : 0.0;
  const double recall =
      ref_total > 0 ? static_cast<double>(match) / ref_total : 0.0;
  constexpr double kBeta = 2.0;
  const double denom = kBeta * kBeta * precision + recall;
  if (precision + recall == 0.0 || denom == 0.0) return {false, 0.0};
  return {false, (1.0 + kBeta * kBeta) * precision * recall / denom};
}

}  // namespace

double chrf_score(const std::string& hypothesis, const std::string& reference) {
  const std::u32string hyp = uni::decode_utf8(hypothesis);
  const std::u32string ref = uni::decode_utf8(reference);
  double sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= 6; ++n) {
    const OrderScore s = score_order(char_grams(hyp, n), char_grams(ref, n));
    if (s.skipped) continue;
    sum += s.f;
    ++orders;
  }
  const std::vector<std::u32string> hyp_words = words(hyp);
  const std::vector<std::u32string> ref_words = words(ref);
  for (int n = 1; n <= 2; ++n) {
    const OrderScore s =
        score_order(word_grams(hyp_words, n), word_grams(ref_words, n));
    if (s.skipped) continue;
    sum += s.f;
    ++orders;
  }
  return orders > 0 ? sum / orders : 0.0;
}

}  // namespace oracle
