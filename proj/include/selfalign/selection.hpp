#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "selfalign/chrf.hpp"
#include "selfalign/probes.hpp"

namespace selfalign {

/// The four demonstration-selection strategies.
enum class SelectionStrategy {
  kFullyRandom,
  kRandomWithinCategory,
  kChrfWithinCategory,
  kChrfAcrossCategories,
};

/// Canonical spelling used in configs and on the command line:
/// "fully-random", "random-within-category", "chrf-within-category",
/// "chrf-across-categories".
std::string_view strategy_name(SelectionStrategy strategy);

/// Parses a canonical strategy name; throws ConfigError on anything else.
SelectionStrategy parse_strategy(std::string_view name);

/// True for the strategies that draw from the seeded generator. The
/// similarity-ranked strategies ignore the seed entirely.
bool strategy_uses_rng(SelectionStrategy strategy);

/// True for the strategies whose candidate pool is restricted to the test
/// probe's category.
bool strategy_within_category(SelectionStrategy strategy);

/// One selected demonstration: a probe completed with the survey-majority
/// answer for the target country.
struct DemoItem {
  std::string probe_id;
  AnswerOption answer = AnswerOption::kOptionA;
};

/// The ordered demonstrations chosen for one test probe.
struct DemoSet {
  std::vector<DemoItem> items;
  SelectionStrategy strategy = SelectionStrategy::kFullyRandom;
  std::uint64_t seed = 0;
};

/// Selects k demonstrations for `test`. The candidate pool is every probe of
/// the test probe's language except the test probe itself, restricted to
/// probes with a survey majority for `country`, and further restricted to the
/// test probe's category for the within-category strategies. Random
/// strategies draw k probes uniformly without replacement from the seeded
/// generator; similarity strategies take the top k by descending score with
/// probe_id tie-breaks and are seed-independent. Throws InsufficientPoolError
/// when the restricted pool has fewer than k members.
DemoSet select_demos(const Probe& test, const ProbeSet& probes,
                     const MajorityTable& majorities, std::string_view country,
                     SelectionStrategy strategy, std::size_t k,
                     std::uint64_t rng_seed,
                     const chrf::ChrfConfig& chrf_cfg = {},
                     const chrf::NgramProfileCache* cache = nullptr);

/// Returns the same items in a seeded-random order; the strategy and seed
/// fields of the input are preserved.
DemoSet shuffle_demos(const DemoSet& demos, std::uint64_t rng_seed);

}  // namespace selfalign
