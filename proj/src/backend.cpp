#include "selfalign/backend.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "selfalign/digest.hpp"
#include "selfalign/errors.hpp"
#include "selfalign/prompt.hpp"
#include "selfalign/rng.hpp"

namespace selfalign {

namespace {

using json = nlohmann::json;

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

void append_u64le(std::string* bytes, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    bytes->push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

void append_field(std::string* bytes, std::string_view field) {
  append_u64le(bytes, field.size());
  bytes->append(field);
}

}  // namespace

void BackendParams::validate() const {
  if (model_id.empty()) throw ConfigError("model_id must not be empty");
  if (!(temperature >= 0.0)) {
    throw ConfigError("temperature must not be negative");
  }
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be at least 1");
  if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
}

double recommended_temperature(std::string_view model_id) {
  const std::string lowered = ascii_lower(model_id);
  if (lowered.find("llama3") != std::string::npos) return 0.6;
  if (lowered.find("command-r") != std::string::npos ||
      lowered.find("commandr") != std::string::npos) {
    return 0.3;
  }
  if (lowered.find("mistral") != std::string::npos) return 1.0;
  if (lowered.find("gemini") != std::string::npos) return 1.0;
  if (lowered.find("bloomz") != std::string::npos) return 1.0;
  return 1.0;
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

std::vector<ScriptedRule> load_scripted_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open scripted rules file " + path.string());
  std::vector<ScriptedRule> rules;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& err) {
      throw LoadError(where + ": " + err.what());
    }
    if (!record.is_object() || !record.contains("probe_id") ||
        !record["probe_id"].is_string() ||
        !record.contains("base_prob_majority") ||
        !record["base_prob_majority"].is_number() ||
        !record.contains("cue_gain") || !record["cue_gain"].is_number()) {
      throw LoadError(where +
                      ": expected object with probe_id, base_prob_majority, "
                      "cue_gain");
    }
    ScriptedRule rule;
    rule.probe_id = record["probe_id"].get<std::string>();
    rule.base_prob_majority = record["base_prob_majority"].get<double>();
    rule.cue_gain = record["cue_gain"].get<double>();
    if (rule.probe_id.empty()) {
      throw LoadError(where + ": probe_id must not be empty");
    }
    if (rule.base_prob_majority < 0.0 || rule.base_prob_majority > 1.0) {
      throw LoadError(where + ": base_prob_majority must be in [0, 1]");
    }
    if (rule.cue_gain < -1.0 || rule.cue_gain > 1.0) {
      throw LoadError(where + ": cue_gain must be in [-1, 1]");
    }
    if (!seen.insert(rule.probe_id).second) {
      throw LoadError(where + ": duplicate rule for probe \"" + rule.probe_id +
                      "\"");
    }
    rules.push_back(std::move(rule));
  }
  if (rules.empty()) {
    throw LoadError("scripted rules file " + path.string() + " is empty");
  }
  return rules;
}

ScriptedBackend::ScriptedBackend(const ProbeSet& probes,
                                 const MajorityTable& majorities,
                                 std::string country,
                                 std::vector<ScriptedRule> rules, bool noisy)
    : probes_(probes), country_(std::move(country)), noisy_(noisy) {
  for (ScriptedRule& rule : rules) {
    if (rule.probe_id == "*") {
      fallback_ = std::move(rule);
    } else {
      rules_.emplace(rule.probe_id, std::move(rule));
    }
  }
  for (const Probe& probe : probes_.all()) {
    const auto majority = majorities.lookup(probe.question_id, country_);
    if (!majority.has_value()) continue;
    majority_answers_.emplace(probe.probe_id, majority->majority);
    cue_lines_.insert(render_completed(probe, majority->majority));
  }
}

std::vector<std::string> ScriptedBackend::generate(const std::string& prompt,
                                                   const BackendParams& params,
                                                   const GenerateContext& ctx) {
  calls_.fetch_add(1);
  params.validate();
  const Probe* probe = probes_.find(ctx.probe_id);
  if (probe == nullptr) {
    throw std::invalid_argument("scripted backend: unknown probe \"" +
                                ctx.probe_id + "\"");
  }
  const auto majority_it = majority_answers_.find(ctx.probe_id);
  if (majority_it == majority_answers_.end()) {
    throw std::invalid_argument("scripted backend: probe \"" + ctx.probe_id +
                                "\" has no survey majority for " + country_);
  }

  const ScriptedRule* rule = nullptr;
  if (const auto it = rules_.find(ctx.probe_id); it != rules_.end()) {
    rule = &it->second;
  } else if (fallback_.has_value()) {
    rule = &*fallback_;
  } else {
    throw ConfigError("no scripted rule for probe \"" + ctx.probe_id +
                      "\" and no \"*\" fallback rule");
  }

  // Every prompt line that equals a majority-completed statement is a cue.
  int cues = 0;
  std::istringstream lines(prompt);
  for (std::string line; std::getline(lines, line);) {
    if (cue_lines_.count(line) > 0) ++cues;
  }

  const double p = std::clamp(
      rule->base_prob_majority + rule->cue_gain * static_cast<double>(cues),
      0.0, 1.0);

  const AnswerOption majority = majority_it->second;
  std::vector<std::string> responses;
  responses.reserve(params.n_samples);
  for (int i = 0; i < params.n_samples; ++i) {
    // One generator per (run_seed, probe, sample index): prompts with equal
    // effective probability yield identical samples, and a higher probability
    // can only flip samples toward the majority.
    rng::Xoshiro256StarStar gen(
        rng::derive_seed(ctx.run_seed, "scripted-sample", ctx.probe_id,
                         static_cast<std::uint64_t>(i)));
    const AnswerOption answer =
        gen.next_unit() < p ? majority : other_option(majority);
    const std::string& text = probe->option_text(answer);
    responses.push_back(noisy_ ? "I would say " + text + "." : text);
  }
  return responses;
}

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

std::string cache_key(std::string_view model_id, std::string_view prompt,
                      double temperature, int max_new_tokens, int n_samples,
                      int sample_index, std::uint64_t run_seed) {
  std::string bytes;
  bytes.reserve(prompt.size() + model_id.size() + 64);
  append_field(&bytes, "response-cache-v1");
  append_field(&bytes, model_id);
  append_field(&bytes, prompt);
  append_u64le(&bytes, std::bit_cast<std::uint64_t>(temperature));
  append_u64le(&bytes, static_cast<std::uint64_t>(max_new_tokens));
  append_u64le(&bytes, static_cast<std::uint64_t>(n_samples));
  append_u64le(&bytes, static_cast<std::uint64_t>(sample_index));
  append_u64le(&bytes, run_seed);
  return digest::sha256_hex(bytes);
}

ResponseCache::ResponseCache(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  store_path_ = dir / "cache.jsonl";
  index_path_ = dir / "cache.idx";

  std::string index_content;
  if (std::filesystem::exists(store_path_)) {
    std::ifstream in(store_path_, std::ios::binary);
    if (!in) throw CacheCorruptError("cannot open " + store_path_.string());
    std::string line;
    std::uint64_t offset = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::uint64_t line_start = offset;
      offset += line.size() + 1;  // the newline
      if (line.empty()) continue;
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& err) {
        throw CacheCorruptError(store_path_.string() + " line " +
                                std::to_string(line_no) + ": " + err.what());
      }
      if (!record.is_object() || !record.contains("key") ||
          !record["key"].is_string() || !record.contains("response") ||
          !record["response"].is_string()) {
        throw CacheCorruptError(store_path_.string() + " line " +
                                std::to_string(line_no) +
                                ": expected object with key and response");
      }
      std::string key = record["key"].get<std::string>();
      index_content += key + "\t" + std::to_string(line_start) + "\t" +
                       std::to_string(line.size()) + "\n";
      entries_.emplace(std::move(key), record["response"].get<std::string>());
    }
    next_offset_ = offset;
  }

  // The store is the source of truth; refresh the sidecar index whenever it
  // is missing or stale.
  std::string existing_index;
  if (std::filesystem::exists(index_path_)) {
    std::ifstream idx(index_path_, std::ios::binary);
    std::ostringstream buffer;
    buffer << idx.rdbuf();
    existing_index = buffer.str();
  }
  if (existing_index != index_content) {
    std::ofstream idx(index_path_, std::ios::binary | std::ios::trunc);
    idx << index_content;
  }
}

ResponseCache ResponseCache::open(const std::filesystem::path& dir) {
  return ResponseCache(dir);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& response) {
  std::unique_lock lock(mutex_);
  if (entries_.count(key) > 0) return;
  const json record = {{"key", key}, {"response", response}};
  const std::string line = record.dump();
  {
    std::ofstream out(store_path_, std::ios::binary | std::ios::app);
    if (!out) throw CacheCorruptError("cannot append to " + store_path_.string());
    out << line << "\n";
  }
  {
    std::ofstream idx(index_path_, std::ios::binary | std::ios::app);
    idx << key << "\t" << next_offset_ << "\t" << line.size() << "\n";
  }
  next_offset_ += line.size() + 1;
  entries_.emplace(key, response);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Caching wrapper
// ---------------------------------------------------------------------------

std::vector<std::string> CachingBackend::generate(const std::string& prompt,
                                                  const BackendParams& params,
                                                  const GenerateContext& ctx) {
  params.validate();
  std::vector<std::string> keys;
  keys.reserve(params.n_samples);
  for (int i = 0; i < params.n_samples; ++i) {
    keys.push_back(cache_key(params.model_id, prompt, params.temperature,
                             params.max_new_tokens, params.n_samples, i,
                             ctx.run_seed));
  }

  std::vector<std::string> responses;
  responses.reserve(params.n_samples);
  bool all_hit = true;
  for (const std::string& key : keys) {
    if (auto hit = cache_.get(key)) {
      responses.push_back(std::move(*hit));
    } else {
      all_hit = false;
      break;
    }
  }
  if (all_hit) {
    served_from_cache_.fetch_add(1);
    samples_from_cache_.fetch_add(params.n_samples);
    return responses;
  }

  inner_calls_.fetch_add(1);
  responses = inner_.generate(prompt, params, ctx);
  if (responses.size() != static_cast<std::size_t>(params.n_samples)) {
    throw ProtocolError("backend returned " + std::to_string(responses.size()) +
                        " samples instead of " +
                        std::to_string(params.n_samples) + " for probe " +
                        ctx.probe_id);
  }
  for (int i = 0; i < params.n_samples; ++i) {
    cache_.put(keys[i], responses[i]);
  }
  samples_generated_.fetch_add(params.n_samples);
  return responses;
}

CacheStats CachingBackend::stats() const {
  CacheStats out;
  out.served_from_cache = served_from_cache_.load();
  out.inner_calls = inner_calls_.load();
  out.samples_from_cache = samples_from_cache_.load();
  out.samples_generated = samples_generated_.load();
  return out;
}

}  // namespace selfalign
