#include "selfalign/runner.hpp"

#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <utility>

#include "selfalign/chrf.hpp"
#include "selfalign/errors.hpp"
#include "selfalign/http_backend.hpp"
#include "selfalign/rng.hpp"
#include "selfalign/selection.hpp"
#include "selfalign/util.hpp"

namespace selfalign {

namespace {

EvalSetup make_setup(const RunConfig& cfg, const RunContext& ctx) {
  EvalSetup setup;
  setup.probes = &ctx.probes;
  setup.majorities = &ctx.majorities;
  setup.catalog = &ctx.catalog;
  setup.language = cfg.language;
  setup.country = ctx.country;
  setup.mode = cfg.mode;
  setup.params = backend_params(cfg);
  setup.seeds = cfg.seeds;
  setup.parallelism = cfg.parallelism;
  return setup;
}

std::unique_ptr<ModelBackend> make_backend(const RunConfig& cfg,
                                           const RunContext& ctx) {
  if (cfg.backend.kind == "scripted") {
    return std::make_unique<ScriptedBackend>(
        ctx.probes, ctx.majorities, ctx.country,
        load_scripted_rules(cfg.rules_path), cfg.backend.noisy);
  }
  HttpBackendConfig http;
  http.base_url = cfg.backend.base_url;
  http.path = cfg.backend.endpoint_path;
  http.api_key_env = cfg.backend.api_key_env;
  http.requests_per_minute = cfg.backend.requests_per_minute;
  http.timeout_seconds = cfg.backend.timeout_seconds;
  http.jitter_seed = cfg.seeds.sampling;
  return std::make_unique<HttpChatBackend>(std::move(http));
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw LoadError("failed writing " + path.string());
}

// A selection-failure outcome produced outside self_align.
AlignmentOutcome skipped_outcome(const EvalSetup& setup,
                                 const ZeroShotResult& zero,
                                 SelectionStrategy strategy,
                                 const std::string& reason) {
  AlignmentOutcome out;
  out.probe_id = zero.probe->probe_id;
  out.language = zero.probe->language;
  out.country = setup.country;
  out.category_index = zero.probe->category_index;
  out.majority = zero.majority;
  out.zero_dist = zero.dist;
  out.delta_original = zero.delta_original;
  out.classification = OutcomeClass::kSkipped;
  out.strategy = strategy;
  out.seeds = setup.seeds;
  out.skip_reason = reason;
  return out;
}

}  // namespace

RunContext load_run_context(const RunConfig& config) {
  RunContext ctx;
  ctx.probes = load_probes(config.probes_path, &ctx.notices);
  ctx.survey = load_survey(config.survey_path);
  ctx.majorities = MajorityTable::build(ctx.survey, &ctx.notices);
  ctx.mapping = config.mapping_path.empty()
                    ? LanguageCountryMap::builtin()
                    : LanguageCountryMap::load(config.mapping_path);
  ctx.catalog = config.instructions_path.empty()
                    ? InstructionCatalog::builtin()
                    : InstructionCatalog::load(config.instructions_path);
  ctx.country = config.country.empty() ? ctx.mapping.country_for(config.language)
                                       : config.country;
  return ctx;
}

nlohmann::ordered_json run_meta(const RunConfig& config, const RunContext& ctx) {
  nlohmann::ordered_json meta;
  meta["run_id"] = run_id(config);
  meta["config_digest"] = run_config_digest(config);
  meta["config"] = config_to_json(config);
  meta["country"] = ctx.country;
  meta["catalog_version"] = ctx.catalog.version();
  meta["probe_count"] = ctx.probes.size();
  meta["survey_entries"] = ctx.survey.size();
  meta["majority_entries"] = ctx.majorities.size();
  meta["notices"] = ctx.notices;
  return meta;
}

RunArtifacts run_zero_shot(const RunConfig& config) {
  const RunContext ctx = load_run_context(config);
  const EvalSetup setup = make_setup(config, ctx);
  ResponseCache cache = ResponseCache::open(config.output_dir);
  const std::unique_ptr<ModelBackend> inner = make_backend(config, ctx);
  CachingBackend backend(*inner, cache);

  RunArtifacts art;
  art.scan = detect_misaligned(setup, backend);

  const nlohmann::ordered_json meta = run_meta(config, ctx);
  report::Histogram error_sizes = report::Histogram::deciles();
  for (const ZeroShotResult* zero : art.scan.misaligned()) {
    error_sizes.add(zero->delta_original * 100.0);
  }
  report::write_misaligned_csv(config.output_dir / "misaligned.csv", meta,
                               art.scan);
  report::write_missing_csv(config.output_dir / "missing.csv", meta, art.scan);
  report::write_histogram_csv(config.output_dir / "histograms.csv", meta,
                              "error_sizes", error_sizes);
  art.cache_stats = backend.stats();
  return art;
}

RunArtifacts run_self_align(const RunConfig& config) {
  const RunContext ctx = load_run_context(config);
  const EvalSetup setup = make_setup(config, ctx);
  ResponseCache cache = ResponseCache::open(config.output_dir);
  const std::unique_ptr<ModelBackend> inner = make_backend(config, ctx);
  CachingBackend backend(*inner, cache);

  RunArtifacts art;
  art.scan = detect_misaligned(setup, backend);
  const std::vector<const ZeroShotResult*> misaligned = art.scan.misaligned();

  std::optional<chrf::NgramProfileCache> profiles;
  if (!strategy_uses_rng(config.strategy)) profiles.emplace(ctx.probes);
  const chrf::NgramProfileCache* profile_ptr =
      profiles.has_value() ? &*profiles : nullptr;

  std::vector<std::optional<AlignmentOutcome>> slots(misaligned.size());
  util::parallel_for(misaligned.size(), config.parallelism,
                     [&](std::size_t i) {
                       slots[i] = self_align(setup, backend, *misaligned[i],
                                             config.strategy, config.k, {},
                                             profile_ptr);
                     });
  art.outcomes.reserve(slots.size());
  for (std::optional<AlignmentOutcome>& slot : slots) {
    art.outcomes.push_back(std::move(*slot));
  }

  std::vector<report::OutcomeRow> rows;
  rows.reserve(art.outcomes.size());
  for (const AlignmentOutcome& outcome : art.outcomes) {
    rows.push_back(report::to_row(outcome));
  }

  const nlohmann::ordered_json meta = run_meta(config, ctx);
  art.summary = report::summarize(meta, rows);

  report::write_summary_json(config.output_dir / "summary.json", art.summary);
  report::write_outcomes_csv(config.output_dir / "outcomes.csv", meta, rows);
  report::write_histograms_csv(config.output_dir / "histograms.csv",
                               art.summary);
  report::write_categories_csv(config.output_dir / "categories.csv",
                               art.summary);
  report::write_skipped_csv(config.output_dir / "skipped.csv", meta,
                            art.outcomes);
  report::write_misaligned_csv(config.output_dir / "misaligned.csv", meta,
                               art.scan);
  report::write_missing_csv(config.output_dir / "missing.csv", meta, art.scan);

  art.cache_stats = backend.stats();
  return art;
}

RunArtifacts run_robustness(const RunConfig& config, int trials) {
  if (trials < 1) throw ConfigError("robustness requires at least 1 trial");
  const RunContext ctx = load_run_context(config);
  const EvalSetup setup = make_setup(config, ctx);
  ResponseCache cache = ResponseCache::open(config.output_dir);
  const std::unique_ptr<ModelBackend> inner = make_backend(config, ctx);
  CachingBackend backend(*inner, cache);

  RunArtifacts art;
  art.scan = detect_misaligned(setup, backend);
  const std::vector<const ZeroShotResult*> misaligned = art.scan.misaligned();

  std::optional<chrf::NgramProfileCache> profiles;
  if (!strategy_uses_rng(config.strategy)) profiles.emplace(ctx.probes);
  const chrf::NgramProfileCache* profile_ptr =
      profiles.has_value() ? &*profiles : nullptr;

  std::vector<std::vector<AlignmentOutcome>> slots(misaligned.size());
  util::parallel_for(misaligned.size(), config.parallelism, [&](std::size_t i) {
    const ZeroShotResult& zero = *misaligned[i];
    DemoSet demos;
    try {
      demos = select_demos(*zero.probe, ctx.probes, ctx.majorities, ctx.country,
                           config.strategy, config.k,
                           rng::derive_seed(config.seeds.selection,
                                            "demo-selection",
                                            zero.probe->probe_id),
                           {}, profile_ptr);
    } catch (const InsufficientPoolError& err) {
      slots[i] = {skipped_outcome(setup, zero, config.strategy, err.what())};
      return;
    }
    slots[i] = robustness_reorder(setup, backend, zero, demos, trials);
  });

  std::vector<AlignmentOutcome> evaluated;
  int skipped_count = 0;
  for (std::vector<AlignmentOutcome>& probe_outcomes : slots) {
    for (AlignmentOutcome& outcome : probe_outcomes) {
      if (outcome.classification == OutcomeClass::kSkipped) ++skipped_count;
      art.outcomes.push_back(outcome);
      if (outcome.classification != OutcomeClass::kSkipped) {
        evaluated.push_back(std::move(outcome));
      }
    }
  }

  const nlohmann::ordered_json meta = run_meta(config, ctx);
  report::write_robustness_csv(config.output_dir / "robustness.csv", meta,
                               evaluated);
  report::write_skipped_csv(config.output_dir / "skipped.csv", meta,
                            art.outcomes);
  report::write_missing_csv(config.output_dir / "missing.csv", meta, art.scan);

  // Per-trial totals; selection-skipped probes are constant across trials.
  nlohmann::ordered_json summary;
  summary["meta"] = meta;
  nlohmann::ordered_json trial_entries = nlohmann::ordered_json::array();
  double rate_sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    report::RunTotals totals;
    totals.misaligned = static_cast<int>(misaligned.size());
    totals.skipped = skipped_count;
    for (const AlignmentOutcome& outcome : evaluated) {
      if (outcome.trial != trial) continue;
      switch (outcome.classification) {
        case OutcomeClass::kImproved:
          ++totals.improved;
          break;
        case OutcomeClass::kUnchanged:
          ++totals.unchanged;
          break;
        case OutcomeClass::kDecreased:
          ++totals.decreased;
          break;
        case OutcomeClass::kSkipped:
          break;
      }
    }
    const int denominator = totals.improved + totals.unchanged + totals.decreased;
    const double rate =
        denominator > 0 ? static_cast<double>(totals.improved) / denominator
                        : 0.0;
    rate_sum += rate;
    nlohmann::ordered_json entry;
    entry["trial"] = trial;
    nlohmann::ordered_json totals_json;
    totals_json["misaligned"] = totals.misaligned;
    totals_json["improved"] = totals.improved;
    totals_json["unchanged"] = totals.unchanged;
    totals_json["decreased"] = totals.decreased;
    totals_json["skipped"] = totals.skipped;
    entry["totals"] = std::move(totals_json);
    entry["improvement_rate"] = rate;
    trial_entries.push_back(std::move(entry));
  }
  summary["trials"] = std::move(trial_entries);
  summary["mean_improvement_rate"] = trials > 0 ? rate_sum / trials : 0.0;
  write_json_file(config.output_dir / "summary.json", summary);

  art.cache_stats = backend.stats();
  return art;
}

void run_validate(const RunConfig& config, std::ostream& out) {
  const RunContext ctx = load_run_context(config);
  out << "probes: " << ctx.probes.size() << "\n";
  for (const std::string& language : ctx.probes.languages()) {
    out << "  language " << language << ": "
        << ctx.probes.for_language(language).size() << " probes\n";
  }
  out << "survey entries: " << ctx.survey.size() << "\n";
  out << "majorities: " << ctx.majorities.size() << "\n";
  out << "evaluation language: " << config.language << " -> country: "
      << ctx.country << "\n";

  int with_majority = 0;
  int without_majority = 0;
  for (const Probe* probe : ctx.probes.for_language(config.language)) {
    if (ctx.majorities.lookup(probe->question_id, ctx.country).has_value()) {
      ++with_majority;
    } else {
      ++without_majority;
    }
  }
  out << "probes with survey majority: " << with_majority << "\n";
  out << "probes without survey majority: " << without_majority << "\n";

  // Fails here (and exits nonzero) when the catalog cannot serve the run.
  ctx.catalog.instruction_for(config.language, config.mode);
  out << "instruction catalog: " << ctx.catalog.version() << "\n";
  for (const std::string& notice : ctx.notices) {
    out << "notice: " << notice << "\n";
  }
  out << "ok\n";
}

void run_report(const std::filesystem::path& outcomes_csv,
                const std::filesystem::path& output_dir) {
  const report::ParsedOutcomes parsed = report::parse_outcomes_csv(outcomes_csv);
  const report::RunSummary summary = report::summarize(parsed.meta, parsed.rows);
  std::filesystem::create_directories(output_dir);
  report::write_summary_json(output_dir / "summary.json", summary);
  report::write_histograms_csv(output_dir / "histograms.csv", summary);
  report::write_categories_csv(output_dir / "categories.csv", summary);
}

}  // namespace selfalign
