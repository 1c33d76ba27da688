#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "selfalign/backend.hpp"
#include "selfalign/chrf.hpp"
#include "selfalign/config.hpp"
#include "selfalign/errors.hpp"
#include "selfalign/prompt.hpp"
#include "selfalign/rng.hpp"
#include "selfalign/runner.hpp"
#include "selfalign/selection.hpp"

namespace {

constexpr const char* kPrecedenceNote =
    "Flag overrides take precedence over config-file values, which take "
    "precedence over built-in defaults.";

struct RunFlags {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::string> language;
  std::optional<std::string> strategy;
  std::optional<std::string> mode;
  std::optional<int> k;
  std::optional<int> n_samples;
  std::optional<int> parallelism;
};

void add_run_flags(CLI::App* cmd, RunFlags* flags) {
  cmd->add_option("--config", flags->config_path, "Run config JSON file")
      ->required();
  cmd->add_option("--output-dir", flags->output_dir,
                  "Override: directory for run artifacts");
  cmd->add_option("--language", flags->language,
                  "Override: probe language code");
  cmd->add_option("--strategy", flags->strategy,
                  "Override: demonstration selection strategy");
  cmd->add_option("--mode", flags->mode,
                  "Override: prompt mode (answer-only, "
                  "answer-with-explanation)");
  cmd->add_option("--k", flags->k, "Override: demonstrations per prompt");
  cmd->add_option("--n-samples", flags->n_samples,
                  "Override: samples per probe");
  cmd->add_option("--parallelism", flags->parallelism,
                  "Override: concurrent backend requests");
  cmd->footer(kPrecedenceNote);
}

selfalign::RunConfig load_with_overrides(const RunFlags& flags) {
  selfalign::RunConfig cfg = selfalign::load_run_config(flags.config_path);
  if (flags.output_dir)
    cfg.output_dir = std::filesystem::path(*flags.output_dir);
  if (flags.language) cfg.language = *flags.language;
  if (flags.strategy) cfg.strategy = selfalign::parse_strategy(*flags.strategy);
  if (flags.mode) cfg.mode = selfalign::parse_prompt_mode(*flags.mode);
  if (flags.k) {
    if (*flags.k < 1) throw selfalign::ConfigError("--k must be at least 1");
    cfg.k = static_cast<std::size_t>(*flags.k);
  }
  if (flags.n_samples) {
    if (*flags.n_samples < 1)
      throw selfalign::ConfigError("--n-samples must be at least 1");
    cfg.n_samples = *flags.n_samples;
  }
  if (flags.parallelism) {
    if (*flags.parallelism < 1)
      throw selfalign::ConfigError("--parallelism must be at least 1");
    cfg.parallelism = *flags.parallelism;
  }
  return cfg;
}

void print_cache_stats(const selfalign::CacheStats& stats) {
  std::cout << "cache: served_from_cache=" << stats.served_from_cache
            << " inner_calls=" << stats.inner_calls
            << " samples_from_cache=" << stats.samples_from_cache
            << " samples_generated=" << stats.samples_generated << "\n";
}

void print_scan(const selfalign::MisalignmentScan& scan) {
  std::cout << "evaluated: " << scan.results.size()
            << " misaligned: " << scan.misaligned().size()
            << " missing: " << scan.missing.size() << "\n";
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const selfalign::BackendUnavailableError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const selfalign::ProtocolError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Inference-time value alignment harness: probes a language model with "
      "survey-derived cloze questions, detects answers that diverge from "
      "per-country survey majorities, and measures how far survey-completed "
      "demonstrations correct them."};
  app.require_subcommand(1);
  app.footer(kPrecedenceNote);

  CLI::App* validate_cmd = app.add_subcommand(
      "validate",
      "Check probe/survey/mapping consistency without calling any backend");
  RunFlags validate_flags;
  add_run_flags(validate_cmd, &validate_flags);

  CLI::App* chrf_cmd = app.add_subcommand(
      "chrf", "Score hypothesis against reference (score shown x100)");
  std::string chrf_hyp;
  std::string chrf_ref;
  chrf_cmd->add_option("hypothesis", chrf_hyp, "Hypothesis text")->required();
  chrf_cmd->add_option("reference", chrf_ref, "Reference text")->required();

  CLI::App* select_cmd = app.add_subcommand(
      "select", "Print the demonstrations selected for one probe");
  RunFlags select_flags;
  add_run_flags(select_cmd, &select_flags);
  std::string select_probe;
  std::optional<std::uint64_t> select_seed;
  select_cmd->add_option("--probe", select_probe, "Test probe id")->required();
  select_cmd->add_option(
      "--seed", select_seed,
      "Selection seed (default: derived from the config's selection seed "
      "and the probe id)");

  CLI::App* zero_shot_cmd = app.add_subcommand(
      "zero-shot",
      "Sample every probe without demonstrations and report misalignment");
  RunFlags zero_shot_flags;
  add_run_flags(zero_shot_cmd, &zero_shot_flags);

  CLI::App* self_align_cmd = app.add_subcommand(
      "self-align",
      "Full protocol: detect misaligned probes, retry with demonstrations, "
      "classify and report");
  RunFlags self_align_flags;
  add_run_flags(self_align_cmd, &self_align_flags);

  CLI::App* robustness_cmd = app.add_subcommand(
      "robustness",
      "Repeat self-alignment with reshuffled demonstration orders");
  RunFlags robustness_flags;
  add_run_flags(robustness_cmd, &robustness_flags);
  int robustness_trials = 0;
  robustness_cmd
      ->add_option("--trials", robustness_trials,
                   "Number of demonstration orderings per probe (>= 1)")
      ->required();

  CLI::App* report_cmd = app.add_subcommand(
      "report", "Rebuild summary and histogram reports from an outcomes CSV");
  std::string report_outcomes;
  std::string report_output_dir;
  report_cmd
      ->add_option("--outcomes", report_outcomes,
                   "outcomes.csv produced by self-align")
      ->required();
  report_cmd
      ->add_option("--output-dir", report_output_dir,
                   "Directory for the rebuilt reports")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  if (validate_cmd->parsed()) {
    return run_guarded([&] {
      const selfalign::RunConfig cfg = load_with_overrides(validate_flags);
      selfalign::run_validate(cfg, std::cout);
      return 0;
    });
  }

  if (chrf_cmd->parsed()) {
    return run_guarded([&] {
      const double score = selfalign::chrf::chrf_pp(chrf_hyp, chrf_ref);
      std::cout << std::fixed << std::setprecision(6) << score * 100.0 << "\n";
      return 0;
    });
  }

  if (select_cmd->parsed()) {
    return run_guarded([&] {
      const selfalign::RunConfig cfg = load_with_overrides(select_flags);
      const selfalign::RunContext ctx = selfalign::load_run_context(cfg);
      const selfalign::Probe* probe = ctx.probes.find(select_probe);
      if (probe == nullptr) {
        throw selfalign::ConfigError("unknown probe id: " + select_probe);
      }
      const std::uint64_t seed = select_seed.value_or(selfalign::rng::derive_seed(
          cfg.seeds.selection, "demo-selection", probe->probe_id));
      std::optional<selfalign::chrf::NgramProfileCache> profiles;
      if (!selfalign::strategy_uses_rng(cfg.strategy)) {
        profiles.emplace(ctx.probes);
      }
      const selfalign::DemoSet demos = selfalign::select_demos(
          *probe, ctx.probes, ctx.majorities, ctx.country, cfg.strategy, cfg.k,
          seed, {}, profiles.has_value() ? &*profiles : nullptr);
      std::cout << "strategy: " << selfalign::strategy_name(demos.strategy)
                << "\n";
      std::cout << "seed: " << demos.seed << "\n";
      for (const selfalign::DemoItem& item : demos.items) {
        const selfalign::Probe* demo_probe = ctx.probes.find(item.probe_id);
        std::cout << item.probe_id << "\t"
                  << selfalign::render_completed(*demo_probe, item.answer)
                  << "\n";
      }
      return 0;
    });
  }

  if (zero_shot_cmd->parsed()) {
    return run_guarded([&] {
      const selfalign::RunConfig cfg = load_with_overrides(zero_shot_flags);
      const selfalign::RunArtifacts art = selfalign::run_zero_shot(cfg);
      std::cout << "run: " << selfalign::run_id(cfg) << "\n";
      print_scan(art.scan);
      print_cache_stats(art.cache_stats);
      std::cout << "artifacts: " << cfg.output_dir.string() << "\n";
      return 0;
    });
  }

  if (self_align_cmd->parsed()) {
    return run_guarded([&] {
      const selfalign::RunConfig cfg = load_with_overrides(self_align_flags);
      const selfalign::RunArtifacts art = selfalign::run_self_align(cfg);
      std::cout << "run: " << selfalign::run_id(cfg) << "\n";
      print_scan(art.scan);
      const selfalign::report::RunTotals& totals = art.summary.totals;
      std::cout << "outcomes: improved=" << totals.improved
                << " unchanged=" << totals.unchanged
                << " decreased=" << totals.decreased
                << " skipped=" << totals.skipped << "\n";
      std::cout << "improvement_rate: " << std::fixed << std::setprecision(4)
                << art.summary.improvement_rate << "\n";
      print_cache_stats(art.cache_stats);
      std::cout << "artifacts: " << cfg.output_dir.string() << "\n";
      return 0;
    });
  }

  if (robustness_cmd->parsed()) {
    return run_guarded([&] {
      const selfalign::RunConfig cfg = load_with_overrides(robustness_flags);
      const selfalign::RunArtifacts art =
          selfalign::run_robustness(cfg, robustness_trials);
      std::cout << "run: " << selfalign::run_id(cfg) << "\n";
      print_scan(art.scan);
      std::cout << "trials: " << robustness_trials << "\n";
      print_cache_stats(art.cache_stats);
      std::cout << "artifacts: " << cfg.output_dir.string() << "\n";
      return 0;
    });
  }

  if (report_cmd->parsed()) {
    return run_guarded([&] {
      selfalign::run_report(report_outcomes, report_output_dir);
      std::cout << "report written to " << report_output_dir << "\n";
      return 0;
    });
  }

  std::cerr << "error: no subcommand\n";
  return 1;
}
