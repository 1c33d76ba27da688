#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfalign/backend.hpp"
#include "selfalign/chrf.hpp"
#include "selfalign/probes.hpp"
#include "selfalign/prompt.hpp"
#include "selfalign/selection.hpp"

namespace selfalign {

/// How the n sampled responses to one prompt parsed out.
struct ResponseDistribution {
  int n = 0;
  int count_a = 0;
  int count_b = 0;
  int count_unparsed = 0;

  int count_for(AnswerOption option) const {
    return option == AnswerOption::kOptionA ? count_a : count_b;
  }

  /// Throws std::invalid_argument unless the counts are nonnegative and sum
  /// to n.
  void validate() const;
};

/// Parses every raw response against the probe's options and tallies them.
ResponseDistribution tally_responses(const std::vector<std::string>& raw,
                                     const Probe& probe);

/// Fraction of samples answering with the majority option; unparsed samples
/// never count as correct.
double alignment_fraction(const ResponseDistribution& dist,
                          AnswerOption majority);

/// Relative error reduction (delta_original - delta_corrected) /
/// delta_original. Defined only for misaligned baselines: delta_original = 0
/// raises DomainError. Callers gate on an improved classification before
/// reporting the value.
double error_reduction(double delta_original, double delta_corrected);

/// How one probe's alignment moved, or why it could not be evaluated.
enum class OutcomeClass { kImproved, kUnchanged, kDecreased, kSkipped };

/// Canonical spelling: "improved", "unchanged", "decreased", "skipped".
std::string_view outcome_class_name(OutcomeClass cls);

/// Parses a canonical outcome class name; throws LoadError on anything else.
OutcomeClass parse_outcome_class(std::string_view name);

/// Classifies from the integer majority-answer counts of the two passes, so
/// the result agrees exactly with the sign of delta_original -
/// delta_corrected (no float comparison involved).
OutcomeClass classify_counts(int correct_original, int correct_corrected);

/// The independent seeds of one run.
struct SeedBundle {
  std::uint64_t selection = 0;
  std::uint64_t option_order = 0;
  std::uint64_t sampling = 0;
  std::uint64_t shuffle = 0;
};

/// Everything the evaluation passes need besides the backend.
struct EvalSetup {
  const ProbeSet* probes = nullptr;
  const MajorityTable* majorities = nullptr;
  const InstructionCatalog* catalog = nullptr;
  std::string language;
  std::string country;
  PromptMode mode = PromptMode::kAnswerOnly;
  BackendParams params;
  SeedBundle seeds;
  int parallelism = 4;
};

/// Zero-shot measurement of one probe against its survey majority.
struct ZeroShotResult {
  const Probe* probe = nullptr;
  ResponseDistribution dist;
  AnswerOption majority = AnswerOption::kOptionA;
  double majority_share = 0.0;
  double delta_original = 0.0;  // misaligned fraction, 1 - alignment_fraction
};

/// A probe that could not be evaluated because its survey entry is missing
/// or tied.
struct MissingMajority {
  std::string probe_id;
  MajorityGap reason = MajorityGap::kNotInSurvey;
};

/// Zero-shot pass over every probe of the configured language.
struct MisalignmentScan {
  std::vector<ZeroShotResult> results;     // sorted by probe_id
  std::vector<MissingMajority> missing;    // sorted by probe_id

  /// The probes with at least one non-majority sample (delta_original > 0).
  std::vector<const ZeroShotResult*> misaligned() const;
};

/// Samples the zero-shot distribution of every probe (one prompt each, option
/// order decided by a per-probe coin from seeds.option_order) and measures
/// misalignment. Probes without a survey majority are reported in `missing`.
/// Backend errors propagate with probe context.
MisalignmentScan detect_misaligned(const EvalSetup& setup, ModelBackend& backend);

/// Result of the alignment pass (or a robustness trial) for one probe.
struct AlignmentOutcome {
  std::string probe_id;
  std::string language;
  std::string country;
  int category_index = 0;
  AnswerOption majority = AnswerOption::kOptionA;
  ResponseDistribution zero_dist;
  ResponseDistribution aligned_dist;  // zeroed when skipped
  double delta_original = 0.0;
  std::optional<double> delta_corrected;
  std::optional<double> error_reduction;  // present iff classification improved
  OutcomeClass classification = OutcomeClass::kSkipped;
  SelectionStrategy strategy = SelectionStrategy::kFullyRandom;
  SeedBundle seeds;
  std::string skip_reason;  // non-empty iff skipped
  int trial = -1;           // reorder-trial index, -1 outside robustness runs
};

/// Re-prompts one misaligned probe with k demonstrations and classifies the
/// movement of its distribution. The zero-shot distribution is reused, not
/// resampled, and the option-order coin is derived exactly as in the
/// zero-shot pass, so both prompts present the options identically. A pool
/// too small for the strategy yields a skipped outcome with the reason
/// recorded; backend errors propagate.
AlignmentOutcome self_align(const EvalSetup& setup, ModelBackend& backend,
                            const ZeroShotResult& zero,
                            SelectionStrategy strategy, std::size_t k,
                            const chrf::ChrfConfig& chrf_cfg = {},
                            const chrf::NgramProfileCache* cache = nullptr);

/// Runs `trials` reorder trials for one probe: the fixed demonstration set is
/// reshuffled with a per-trial seed and re-evaluated. One outcome per trial,
/// trial index recorded.
std::vector<AlignmentOutcome> robustness_reorder(const EvalSetup& setup,
                                                 ModelBackend& backend,
                                                 const ZeroShotResult& zero,
                                                 const DemoSet& demos,
                                                 int trials);

}  // namespace selfalign
