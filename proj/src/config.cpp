#include "selfalign/config.hpp"

#include <fstream>

#include "selfalign/digest.hpp"
#include "selfalign/errors.hpp"

namespace selfalign {

namespace {

using json = nlohmann::json;

constexpr int kSupportedConfigVersion = 1;
constexpr int kAnswerOnlyTokenCap = 16;
constexpr int kExplanationTokenCap = 256;

const json* find_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& context) {
  const json* field = find_field(obj, key);
  if (field == nullptr || !field->is_string()) {
    throw ConfigError(context + ": missing string field \"" + key + "\"");
  }
  return field->get<std::string>();
}

std::string optional_string(const json& obj, const char* key,
                            std::string fallback, const std::string& context) {
  const json* field = find_field(obj, key);
  if (field == nullptr) return fallback;
  if (!field->is_string()) {
    throw ConfigError(context + ": field \"" + key + "\" must be a string");
  }
  return field->get<std::string>();
}

long long optional_integer(const json& obj, const char* key, long long fallback,
                           const std::string& context) {
  const json* field = find_field(obj, key);
  if (field == nullptr) return fallback;
  if (!field->is_number_integer()) {
    throw ConfigError(context + ": field \"" + key + "\" must be an integer");
  }
  return field->get<long long>();
}

bool optional_bool(const json& obj, const char* key, bool fallback,
                   const std::string& context) {
  const json* field = find_field(obj, key);
  if (field == nullptr) return fallback;
  if (!field->is_boolean()) {
    throw ConfigError(context + ": field \"" + key + "\" must be a boolean");
  }
  return field->get<bool>();
}

std::uint64_t require_seed(const json& seeds, const char* key,
                           const std::string& context) {
  const json* field = find_field(seeds, key);
  if (field == nullptr || !field->is_number_integer() ||
      (field->is_number_integer() && !field->is_number_unsigned() &&
       field->get<long long>() < 0)) {
    throw ConfigError(context + ": seeds." + key +
                      " must be an explicit nonnegative integer");
  }
  return field->get<std::uint64_t>();
}

std::filesystem::path resolve_path(const std::filesystem::path& base,
                                   const std::string& value) {
  const std::filesystem::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " file does not exist: " +
                      path.string());
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& err) {
    throw ConfigError("config " + path.string() + ": " + err.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config " + path.string() + ": top level must be an object");
  }
  const std::string context = "config " + path.string();
  const std::filesystem::path base = path.parent_path();

  RunConfig cfg;
  cfg.config_version = static_cast<int>(
      optional_integer(doc, "config_version", kSupportedConfigVersion, context));
  if (cfg.config_version != kSupportedConfigVersion) {
    throw ConfigError(context + ": unsupported config_version " +
                      std::to_string(cfg.config_version) + " (expected " +
                      std::to_string(kSupportedConfigVersion) + ")");
  }

  const json* paths = find_field(doc, "paths");
  if (paths == nullptr || !paths->is_object()) {
    throw ConfigError(context + ": missing object field \"paths\"");
  }
  cfg.probes_path = resolve_path(base, require_string(*paths, "probes", context));
  cfg.survey_path = resolve_path(base, require_string(*paths, "survey", context));
  if (const std::string v = optional_string(*paths, "mapping", "", context);
      !v.empty()) {
    cfg.mapping_path = resolve_path(base, v);
  }
  if (const std::string v = optional_string(*paths, "instructions", "", context);
      !v.empty()) {
    cfg.instructions_path = resolve_path(base, v);
  }
  if (const std::string v = optional_string(*paths, "scripted_rules", "", context);
      !v.empty()) {
    cfg.rules_path = resolve_path(base, v);
  }

  cfg.language = optional_string(doc, "language", cfg.language, context);
  if (cfg.language.empty()) {
    throw ConfigError(context + ": language must not be empty");
  }
  cfg.country = optional_string(doc, "country", "", context);
  cfg.model_id = optional_string(doc, "model_id", cfg.model_id, context);
  if (cfg.model_id.empty()) {
    throw ConfigError(context + ": model_id must not be empty");
  }
  if (const json* field = find_field(doc, "temperature")) {
    if (!field->is_number()) {
      throw ConfigError(context + ": temperature must be a number");
    }
    cfg.temperature = field->get<double>();
    if (*cfg.temperature < 0.0) {
      throw ConfigError(context + ": temperature must not be negative");
    }
  }
  if (const json* field = find_field(doc, "max_new_tokens")) {
    if (!field->is_number_integer() || field->get<long long>() < 1) {
      throw ConfigError(context + ": max_new_tokens must be a positive integer");
    }
    cfg.max_new_tokens = static_cast<int>(field->get<long long>());
  }
  cfg.strategy = parse_strategy(
      optional_string(doc, "strategy", std::string(strategy_name(cfg.strategy)),
                      context));
  const long long k = optional_integer(doc, "k", static_cast<long long>(cfg.k),
                                       context);
  if (k < 1) throw ConfigError(context + ": k must be at least 1");
  cfg.k = static_cast<std::size_t>(k);
  const long long n_samples =
      optional_integer(doc, "n_samples", cfg.n_samples, context);
  if (n_samples < 1) throw ConfigError(context + ": n_samples must be at least 1");
  cfg.n_samples = static_cast<int>(n_samples);
  cfg.mode = parse_prompt_mode(
      optional_string(doc, "mode", std::string(prompt_mode_name(cfg.mode)),
                      context));

  const json* seeds = find_field(doc, "seeds");
  if (seeds == nullptr || !seeds->is_object()) {
    throw ConfigError(context +
                      ": missing object field \"seeds\" (selection, "
                      "option_order, sampling, shuffle must be explicit)");
  }
  cfg.seeds.selection = require_seed(*seeds, "selection", context);
  cfg.seeds.option_order = require_seed(*seeds, "option_order", context);
  cfg.seeds.sampling = require_seed(*seeds, "sampling", context);
  cfg.seeds.shuffle = require_seed(*seeds, "shuffle", context);

  const std::string output_dir = require_string(doc, "output_dir", context);
  cfg.output_dir = resolve_path(base, output_dir);

  const long long parallelism =
      optional_integer(doc, "parallelism", cfg.parallelism, context);
  if (parallelism < 1) {
    throw ConfigError(context + ": parallelism must be at least 1");
  }
  cfg.parallelism = static_cast<int>(parallelism);

  if (const json* backend = find_field(doc, "backend")) {
    if (!backend->is_object()) {
      throw ConfigError(context + ": backend must be an object");
    }
    cfg.backend.kind = optional_string(*backend, "kind", cfg.backend.kind, context);
    cfg.backend.noisy = optional_bool(*backend, "noisy", false, context);
    cfg.backend.base_url = optional_string(*backend, "base_url", "", context);
    cfg.backend.endpoint_path = optional_string(
        *backend, "endpoint_path", cfg.backend.endpoint_path, context);
    cfg.backend.api_key_env =
        optional_string(*backend, "api_key_env", "", context);
    cfg.backend.requests_per_minute = static_cast<int>(optional_integer(
        *backend, "requests_per_minute", cfg.backend.requests_per_minute,
        context));
    cfg.backend.timeout_seconds = static_cast<int>(optional_integer(
        *backend, "timeout_seconds", cfg.backend.timeout_seconds, context));
  }
  if (cfg.backend.kind != "scripted" && cfg.backend.kind != "http") {
    throw ConfigError(context + ": backend.kind must be \"scripted\" or \"http\"");
  }
  if (cfg.backend.kind == "scripted" && cfg.rules_path.empty()) {
    throw ConfigError(context +
                      ": scripted backend requires paths.scripted_rules");
  }
  if (cfg.backend.kind == "http" && cfg.backend.base_url.empty()) {
    throw ConfigError(context + ": http backend requires backend.base_url");
  }
  if (cfg.backend.requests_per_minute < 0) {
    throw ConfigError(context + ": requests_per_minute must not be negative");
  }
  if (cfg.backend.timeout_seconds < 1) {
    throw ConfigError(context + ": timeout_seconds must be at least 1");
  }

  require_file(cfg.probes_path, "probes");
  require_file(cfg.survey_path, "survey");
  if (!cfg.mapping_path.empty()) require_file(cfg.mapping_path, "mapping");
  if (!cfg.instructions_path.empty()) {
    require_file(cfg.instructions_path, "instructions");
  }
  if (!cfg.rules_path.empty()) require_file(cfg.rules_path, "scripted rules");

  return cfg;
}

BackendParams backend_params(const RunConfig& config) {
  BackendParams params;
  params.model_id = config.model_id;
  params.temperature =
      config.temperature.value_or(recommended_temperature(config.model_id));
  params.max_new_tokens = config.max_new_tokens.value_or(
      config.mode == PromptMode::kAnswerOnly ? kAnswerOnlyTokenCap
                                             : kExplanationTokenCap);
  params.n_samples = config.n_samples;
  params.validate();
  return params;
}

nlohmann::ordered_json config_to_json(const RunConfig& config) {
  const BackendParams params = backend_params(config);
  nlohmann::ordered_json j;
  j["config_version"] = config.config_version;

  nlohmann::ordered_json paths;
  paths["probes"] = config.probes_path.generic_string();
  paths["survey"] = config.survey_path.generic_string();
  paths["mapping"] = config.mapping_path.generic_string();
  paths["instructions"] = config.instructions_path.generic_string();
  paths["scripted_rules"] = config.rules_path.generic_string();
  j["paths"] = std::move(paths);

  j["language"] = config.language;
  j["country"] = config.country;
  j["model_id"] = config.model_id;
  j["temperature"] = params.temperature;
  j["max_new_tokens"] = params.max_new_tokens;
  j["strategy"] = std::string(strategy_name(config.strategy));
  j["k"] = config.k;
  j["n_samples"] = config.n_samples;
  j["mode"] = std::string(prompt_mode_name(config.mode));

  nlohmann::ordered_json seeds;
  seeds["selection"] = config.seeds.selection;
  seeds["option_order"] = config.seeds.option_order;
  seeds["sampling"] = config.seeds.sampling;
  seeds["shuffle"] = config.seeds.shuffle;
  j["seeds"] = std::move(seeds);

  j["parallelism"] = config.parallelism;

  nlohmann::ordered_json backend;
  backend["kind"] = config.backend.kind;
  backend["noisy"] = config.backend.noisy;
  backend["base_url"] = config.backend.base_url;
  backend["endpoint_path"] = config.backend.endpoint_path;
  backend["api_key_env"] = config.backend.api_key_env;
  backend["requests_per_minute"] = config.backend.requests_per_minute;
  backend["timeout_seconds"] = config.backend.timeout_seconds;
  j["backend"] = std::move(backend);
  return j;
}

std::string run_config_digest(const RunConfig& config) {
  return digest::sha256_hex(config_to_json(config).dump());
}

std::string run_id(const RunConfig& config) {
  return "run-" + run_config_digest(config).substr(0, 12);
}

}  // namespace selfalign
