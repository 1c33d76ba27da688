#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "selfalign/backend.hpp"
#include "selfalign/eval.hpp"
#include "selfalign/prompt.hpp"
#include "selfalign/selection.hpp"

namespace selfalign {

/// Backend selection inside a run config.
struct BackendConfig {
  std::string kind = "scripted";  // "scripted" or "http"
  bool noisy = false;             // scripted: wrap answers in filler text
  std::string base_url;           // http
  std::string endpoint_path = "/v1/chat/completions";
  std::string api_key_env;
  int requests_per_minute = 0;
  int timeout_seconds = 60;
};

/// One run, fully determined: inputs, protocol settings, seeds, backend and
/// output location. Loaded from a versioned JSON file; every relative path is
/// resolved against the config file's directory.
struct RunConfig {
  int config_version = 1;
  std::filesystem::path probes_path;
  std::filesystem::path survey_path;
  std::filesystem::path mapping_path;       // empty: built-in mapping
  std::filesystem::path instructions_path;  // empty: built-in catalog
  std::filesystem::path rules_path;         // scripted backend only
  std::string language = "en";
  std::string country;  // empty: derived from the language mapping
  std::string model_id = "scripted";
  std::optional<double> temperature;   // default: recommended for model_id
  std::optional<int> max_new_tokens;   // default: 16 answer-only, 256 with explanation
  SelectionStrategy strategy = SelectionStrategy::kFullyRandom;
  std::size_t k = 5;
  int n_samples = 10;
  PromptMode mode = PromptMode::kAnswerOnly;
  SeedBundle seeds;  // must be explicit in the file; no wall-clock defaults
  std::filesystem::path output_dir;
  int parallelism = 4;
  BackendConfig backend;
};

/// Loads and validates a run config. Referenced files must exist; the seeds
/// block and output_dir are mandatory. Violations throw ConfigError naming
/// the field.
RunConfig load_run_config(const std::filesystem::path& path);

/// Effective sampling parameters: explicit values when set, otherwise the
/// model's recommended temperature and the mode's token cap.
BackendParams backend_params(const RunConfig& config);

/// SHA-256 over the canonical JSON of the effective config with output_dir
/// excluded, so re-running into another directory reproduces the same digest.
std::string run_config_digest(const RunConfig& config);

/// "run-" + the first 12 digest hex digits.
std::string run_id(const RunConfig& config);

/// The canonical JSON the digest is computed over (also embedded in reports).
nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace selfalign
