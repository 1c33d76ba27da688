#include "selfalign/eval.hpp"

#include <optional>
#include <stdexcept>

#include "selfalign/errors.hpp"
#include "selfalign/rng.hpp"
#include "selfalign/util.hpp"

namespace selfalign {

namespace {

// Both passes (and every reorder trial) derive the option-order coin the same
// way, so a probe presents its options identically throughout a run.
std::uint64_t option_order_seed_for(const SeedBundle& seeds,
                                    const std::string& probe_id) {
  return rng::derive_seed(seeds.option_order, "option-order", probe_id);
}

void check_setup(const EvalSetup& setup) {
  if (setup.probes == nullptr || setup.majorities == nullptr ||
      setup.catalog == nullptr) {
    throw std::invalid_argument("evaluation setup is missing probes, "
                                "majorities or the instruction catalog");
  }
  setup.params.validate();
}

ResponseDistribution sample_distribution(const EvalSetup& setup,
                                         ModelBackend& backend,
                                         const Probe& probe,
                                         const std::vector<CompletedDemo>& demos) {
  const PromptSpec spec =
      build_prompt(probe, demos, *setup.catalog, setup.mode,
                   option_order_seed_for(setup.seeds, probe.probe_id));
  const std::vector<std::string> raw = backend.generate(
      serialize_prompt(spec), setup.params, {probe.probe_id, setup.seeds.sampling});
  return tally_responses(raw, probe);
}

// Fills the post-alignment half of an outcome from a sampled distribution.
void finish_outcome(const ZeroShotResult& zero,
                    const ResponseDistribution& aligned,
                    AlignmentOutcome* out) {
  out->aligned_dist = aligned;
  out->delta_corrected = 1.0 - alignment_fraction(aligned, zero.majority);
  out->classification = classify_counts(zero.dist.count_for(zero.majority),
                                        aligned.count_for(zero.majority));
  if (out->classification == OutcomeClass::kImproved) {
    out->error_reduction =
        error_reduction(out->delta_original, *out->delta_corrected);
  }
}

AlignmentOutcome outcome_shell(const EvalSetup& setup,
                               const ZeroShotResult& zero,
                               SelectionStrategy strategy) {
  AlignmentOutcome out;
  out.probe_id = zero.probe->probe_id;
  out.language = zero.probe->language;
  out.country = setup.country;
  out.category_index = zero.probe->category_index;
  out.majority = zero.majority;
  out.zero_dist = zero.dist;
  out.delta_original = zero.delta_original;
  out.strategy = strategy;
  out.seeds = setup.seeds;
  return out;
}

}  // namespace

void ResponseDistribution::validate() const {
  if (n < 0 || count_a < 0 || count_b < 0 || count_unparsed < 0 ||
      count_a + count_b + count_unparsed != n) {
    throw std::invalid_argument("response distribution counts do not sum to n");
  }
}

ResponseDistribution tally_responses(const std::vector<std::string>& raw,
                                     const Probe& probe) {
  ResponseDistribution dist;
  dist.n = static_cast<int>(raw.size());
  for (const std::string& response : raw) {
    const ParsedAnswer parsed = parse_response(response, probe);
    if (!parsed.value.has_value()) {
      ++dist.count_unparsed;
    } else if (*parsed.value == AnswerOption::kOptionA) {
      ++dist.count_a;
    } else {
      ++dist.count_b;
    }
  }
  return dist;
}

double alignment_fraction(const ResponseDistribution& dist,
                          AnswerOption majority) {
  dist.validate();
  if (dist.n == 0) {
    throw std::invalid_argument("alignment fraction of an empty distribution");
  }
  return static_cast<double>(dist.count_for(majority)) /
         static_cast<double>(dist.n);
}

double error_reduction(double delta_original, double delta_corrected) {
  if (!(delta_original > 0.0)) {
    throw DomainError("error reduction is undefined when delta_original is "
                      "not positive (the probe was not misaligned)");
  }
  return (delta_original - delta_corrected) / delta_original;
}

std::string_view outcome_class_name(OutcomeClass cls) {
  switch (cls) {
    case OutcomeClass::kImproved:
      return "improved";
    case OutcomeClass::kUnchanged:
      return "unchanged";
    case OutcomeClass::kDecreased:
      return "decreased";
    case OutcomeClass::kSkipped:
      return "skipped";
  }
  throw std::invalid_argument("unknown outcome class value");
}

OutcomeClass parse_outcome_class(std::string_view name) {
  if (name == "improved") return OutcomeClass::kImproved;
  if (name == "unchanged") return OutcomeClass::kUnchanged;
  if (name == "decreased") return OutcomeClass::kDecreased;
  if (name == "skipped") return OutcomeClass::kSkipped;
  throw LoadError("unknown outcome class \"" + std::string(name) + "\"");
}

OutcomeClass classify_counts(int correct_original, int correct_corrected) {
  if (correct_corrected > correct_original) return OutcomeClass::kImproved;
  if (correct_corrected == correct_original) return OutcomeClass::kUnchanged;
  return OutcomeClass::kDecreased;
}

std::vector<const ZeroShotResult*> MisalignmentScan::misaligned() const {
  std::vector<const ZeroShotResult*> out;
  for (const ZeroShotResult& result : results) {
    if (result.delta_original > 0.0) out.push_back(&result);
  }
  return out;
}

MisalignmentScan detect_misaligned(const EvalSetup& setup,
                                   ModelBackend& backend) {
  check_setup(setup);
  const std::vector<const Probe*> probes =
      setup.probes->for_language(setup.language);

  std::vector<std::optional<ZeroShotResult>> result_slots(probes.size());
  std::vector<std::optional<MissingMajority>> missing_slots(probes.size());
  util::parallel_for(probes.size(), setup.parallelism, [&](std::size_t i) {
    const Probe& probe = *probes[i];
    const auto majority =
        setup.majorities->lookup(probe.question_id, setup.country);
    if (!majority.has_value()) {
      missing_slots[i] = MissingMajority{
          probe.probe_id,
          setup.majorities->gap(probe.question_id, setup.country)};
      return;
    }
    ZeroShotResult zero;
    zero.probe = &probe;
    zero.dist = sample_distribution(setup, backend, probe, {});
    zero.majority = majority->majority;
    zero.majority_share = majority->majority_share;
    zero.delta_original = 1.0 - alignment_fraction(zero.dist, zero.majority);
    result_slots[i] = zero;
  });

  // The probe list is sorted by probe_id and the slots preserve it.
  MisalignmentScan scan;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (result_slots[i].has_value()) scan.results.push_back(*result_slots[i]);
    if (missing_slots[i].has_value()) scan.missing.push_back(*missing_slots[i]);
  }
  return scan;
}

AlignmentOutcome self_align(const EvalSetup& setup, ModelBackend& backend,
                            const ZeroShotResult& zero,
                            SelectionStrategy strategy, std::size_t k,
                            const chrf::ChrfConfig& chrf_cfg,
                            const chrf::NgramProfileCache* cache) {
  check_setup(setup);
  AlignmentOutcome out = outcome_shell(setup, zero, strategy);

  DemoSet demos;
  try {
    demos = select_demos(
        *zero.probe, *setup.probes, *setup.majorities, setup.country, strategy,
        k, rng::derive_seed(setup.seeds.selection, "demo-selection", out.probe_id),
        chrf_cfg, cache);
  } catch (const InsufficientPoolError& err) {
    out.classification = OutcomeClass::kSkipped;
    out.skip_reason = err.what();
    return out;
  }

  const ResponseDistribution aligned = sample_distribution(
      setup, backend, *zero.probe, resolve_demos(demos, *setup.probes));
  finish_outcome(zero, aligned, &out);
  return out;
}

std::vector<AlignmentOutcome> robustness_reorder(const EvalSetup& setup,
                                                 ModelBackend& backend,
                                                 const ZeroShotResult& zero,
                                                 const DemoSet& demos,
                                                 int trials) {
  check_setup(setup);
  if (trials < 1) throw ConfigError("reorder trials must be at least 1");

  std::vector<AlignmentOutcome> outcomes;
  outcomes.reserve(trials);
  for (int trial = 0; trial < trials; ++trial) {
    const DemoSet shuffled = shuffle_demos(
        demos, rng::derive_seed(setup.seeds.shuffle, "shuffle",
                                zero.probe->probe_id,
                                static_cast<std::uint64_t>(trial)));
    AlignmentOutcome out = outcome_shell(setup, zero, demos.strategy);
    out.trial = trial;
    const ResponseDistribution aligned = sample_distribution(
        setup, backend, *zero.probe, resolve_demos(shuffled, *setup.probes));
    finish_outcome(zero, aligned, &out);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

}  // namespace selfalign
