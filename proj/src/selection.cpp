#include "selfalign/selection.hpp"

#include <string>

#include "selfalign/errors.hpp"
#include "selfalign/rng.hpp"

namespace selfalign {

std::string_view strategy_name(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::kFullyRandom:
      return "fully-random";
    case SelectionStrategy::kRandomWithinCategory:
      return "random-within-category";
    case SelectionStrategy::kChrfWithinCategory:
      return "chrf-within-category";
    case SelectionStrategy::kChrfAcrossCategories:
      return "chrf-across-categories";
  }
  throw ConfigError("unknown selection strategy value");
}

SelectionStrategy parse_strategy(std::string_view name) {
  if (name == "fully-random") return SelectionStrategy::kFullyRandom;
  if (name == "random-within-category") return SelectionStrategy::kRandomWithinCategory;
  if (name == "chrf-within-category") return SelectionStrategy::kChrfWithinCategory;
  if (name == "chrf-across-categories") return SelectionStrategy::kChrfAcrossCategories;
  throw ConfigError("unknown selection strategy \"" + std::string(name) +
                    "\"; expected fully-random, random-within-category, "
                    "chrf-within-category or chrf-across-categories");
}

bool strategy_uses_rng(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::kFullyRandom ||
         strategy == SelectionStrategy::kRandomWithinCategory;
}

bool strategy_within_category(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::kRandomWithinCategory ||
         strategy == SelectionStrategy::kChrfWithinCategory;
}

DemoSet select_demos(const Probe& test, const ProbeSet& probes,
                     const MajorityTable& majorities, std::string_view country,
                     SelectionStrategy strategy, std::size_t k,
                     std::uint64_t rng_seed, const chrf::ChrfConfig& chrf_cfg,
                     const chrf::NgramProfileCache* cache) {
  const bool same_category = strategy_within_category(strategy);
  std::vector<const Probe*> pool;
  for (const Probe* candidate : probes.for_language(test.language)) {
    if (candidate->probe_id == test.probe_id) continue;
    if (same_category && candidate->category_index != test.category_index) continue;
    if (!majorities.lookup(candidate->question_id, country).has_value()) continue;
    pool.push_back(candidate);
  }
  if (pool.size() < k) {
    throw InsufficientPoolError(
        "probe " + test.probe_id + ": pool for strategy " +
        std::string(strategy_name(strategy)) + " has " +
        std::to_string(pool.size()) + " candidates, need " + std::to_string(k));
  }

  std::vector<const Probe*> chosen;
  chosen.reserve(k);
  if (strategy_uses_rng(strategy)) {
    rng::Xoshiro256StarStar gen(rng_seed);
    for (std::size_t index : rng::sample_indices(pool.size(), k, gen)) {
      chosen.push_back(pool[index]);
    }
  } else {
    for (const chrf::RankedProbe& ranked :
         chrf::rank_by_chrf(test, pool, chrf_cfg, k, cache)) {
      chosen.push_back(ranked.probe);
    }
  }

  DemoSet out;
  out.strategy = strategy;
  out.seed = rng_seed;
  out.items.reserve(k);
  for (const Probe* probe : chosen) {
    const auto majority = majorities.lookup(probe->question_id, country);
    out.items.push_back({probe->probe_id, majority->majority});
  }
  return out;
}

DemoSet shuffle_demos(const DemoSet& demos, std::uint64_t rng_seed) {
  DemoSet out = demos;
  rng::Xoshiro256StarStar gen(rng_seed);
  rng::shuffle(out.items, gen);
  return out;
}

}  // namespace selfalign
