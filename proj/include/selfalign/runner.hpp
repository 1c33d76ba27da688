#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "selfalign/backend.hpp"
#include "selfalign/config.hpp"
#include "selfalign/eval.hpp"
#include "selfalign/probes.hpp"
#include "selfalign/prompt.hpp"
#include "selfalign/report.hpp"

namespace selfalign {

/// Everything a run loads before touching a backend.
struct RunContext {
  ProbeSet probes;
  SurveyTable survey;
  MajorityTable majorities;
  LanguageCountryMap mapping;
  InstructionCatalog catalog;
  std::string country;  // effective: config override or mapped from language
  std::vector<std::string> notices;  // load warnings and tie exclusions
};

/// Loads probes, survey, majorities, mapping and instruction catalog per the
/// config and resolves the evaluation country.
RunContext load_run_context(const RunConfig& config);

/// The deterministic identity block embedded in every artifact: run id,
/// config digest, full effective config (incl. seeds), effective country,
/// catalog version, input sizes and load notices. Contains nothing volatile,
/// so repeated runs emit byte-identical artifacts.
nlohmann::ordered_json run_meta(const RunConfig& config, const RunContext& ctx);

/// What a completed run hands back to callers (the CLI and tests).
struct RunArtifacts {
  MisalignmentScan scan;
  std::vector<AlignmentOutcome> outcomes;  // one per misaligned probe
  report::RunSummary summary;              // self-align runs only
  CacheStats cache_stats;
};

/// Zero-shot pass: writes misaligned.csv, missing.csv and the zero-shot
/// error-size histogram into output_dir.
RunArtifacts run_zero_shot(const RunConfig& config);

/// Full protocol: zero-shot scan, demonstration selection, aligned pass,
/// classification. Writes summary.json, outcomes.csv, histograms.csv,
/// categories.csv, skipped.csv, misaligned.csv and missing.csv.
RunArtifacts run_self_align(const RunConfig& config);

/// Reorder-robustness protocol: demonstrations are selected once per probe,
/// then re-evaluated under `trials` seeded shuffles. Writes robustness.csv,
/// skipped.csv, missing.csv and a per-trial summary.json.
RunArtifacts run_robustness(const RunConfig& config, int trials);

/// Checks inputs without any backend: loads everything, then reports corpus
/// counts and survey coverage for the configured language to `out`.
void run_validate(const RunConfig& config, std::ostream& out);

/// Rebuilds summary.json, histograms.csv and categories.csv in `output_dir`
/// from an existing outcomes.csv (its embedded meta block is reused).
void run_report(const std::filesystem::path& outcomes_csv,
                const std::filesystem::path& output_dir);

}  // namespace selfalign
