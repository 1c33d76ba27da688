#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "selfalign/probes.hpp"

namespace selfalign {

/// Sampling parameters shared by every backend.
struct BackendParams {
  std::string model_id;
  double temperature = 1.0;
  int max_new_tokens = 16;
  int n_samples = 10;

  /// Throws ConfigError unless model_id is non-empty, temperature >= 0,
  /// max_new_tokens >= 1 and n_samples >= 1.
  void validate() const;
};

/// Default sampling temperature for the known model families (matched as a
/// case-insensitive substring of model_id): llama3 0.6, mistral 1.0, gemini
/// 1.0, command-r 0.3, bloomz 1.0. Unknown models get 1.0.
double recommended_temperature(std::string_view model_id);

/// Probe-scoped context passed along with every generation request, used for
/// error messages, cache keying and the scripted backend's sampling streams.
struct GenerateContext {
  std::string probe_id;
  std::uint64_t run_seed = 0;
};

/// Uniform contract: sample exactly params.n_samples raw response texts for a
/// serialized prompt. Implementations must be safe to call concurrently for
/// distinct probes.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::vector<std::string> generate(const std::string& prompt,
                                            const BackendParams& params,
                                            const GenerateContext& ctx) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// Behavior rule for one probe under the scripted backend. The probability of
/// emitting the majority option is base_prob_majority plus cue_gain per
/// demonstration line completed with that demonstration's own majority
/// answer, clamped to [0, 1]. probe_id "*" is the fallback for probes without
/// a rule of their own.
struct ScriptedRule {
  std::string probe_id;
  double base_prob_majority = 0.0;
  double cue_gain = 0.0;
};

/// Loads a JSON-lines rules file with fields probe_id, base_prob_majority
/// (in [0, 1]) and cue_gain (in [-1, 1]); duplicate probe_ids fail the load.
std::vector<ScriptedRule> load_scripted_rules(const std::filesystem::path& path);

/// Deterministic model stand-in for tests and offline runs. Each sample i for
/// probe p draws one uniform number from a generator seeded by
/// (ctx.run_seed, p, i) only, so two prompts with equal effective probability
/// produce bit-identical samples, and raising the probability can only turn
/// minority answers into majority answers, never the reverse.
class ScriptedBackend : public ModelBackend {
 public:
  /// `country` selects the survey majorities that define both the emitted
  /// majority option and the set of majority-completed demonstration lines
  /// that count as cues. With `noisy` set, responses read "I would say X."
  /// instead of the bare option text.
  ScriptedBackend(const ProbeSet& probes, const MajorityTable& majorities,
                  std::string country, std::vector<ScriptedRule> rules,
                  bool noisy = false);

  std::vector<std::string> generate(const std::string& prompt,
                                    const BackendParams& params,
                                    const GenerateContext& ctx) override;

  /// Number of generate() calls served so far (used to prove cache replay).
  long long calls() const { return calls_.load(); }

 private:
  const ProbeSet& probes_;
  std::string country_;
  std::unordered_map<std::string, ScriptedRule> rules_;
  std::optional<ScriptedRule> fallback_;
  // Majority answer per probe_id, plus every majority-completed statement
  // of this country's probes (the cue lines).
  std::unordered_map<std::string, AnswerOption> majority_answers_;
  std::unordered_set<std::string> cue_lines_;
  bool noisy_ = false;
  std::atomic<long long> calls_{0};
};

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

/// Key for one cached sample: a SHA-256 digest over the length-prefixed
/// canonical bytes of (model_id, prompt, temperature bits, max_new_tokens,
/// n_samples, sample_index, run_seed). Any byte difference in the prompt or
/// any parameter change yields a different key.
std::string cache_key(std::string_view model_id, std::string_view prompt,
                      double temperature, int max_new_tokens, int n_samples,
                      int sample_index, std::uint64_t run_seed);

/// Persistent store of raw responses: an append-only JSON-lines file
/// (cache.jsonl, the source of truth) plus a sidecar offset index
/// (cache.idx) kept for auditability and external tooling. The index is
/// rebuilt when missing or stale; a malformed store record raises
/// CacheCorruptError. One writer with concurrent readers.
class ResponseCache {
 public:
  /// Opens (creating if needed) the cache files inside `dir`.
  static ResponseCache open(const std::filesystem::path& dir);

  std::optional<std::string> get(const std::string& key) const;

  /// Stores a response; re-putting an existing key is a no-op.
  void put(const std::string& key, const std::string& response);

  std::size_t size() const;
  const std::filesystem::path& store_path() const { return store_path_; }

 private:
  explicit ResponseCache(const std::filesystem::path& dir);

  std::filesystem::path store_path_;
  std::filesystem::path index_path_;
  std::map<std::string, std::string> entries_;
  std::uint64_t next_offset_ = 0;
  mutable std::shared_mutex mutex_;
};

/// Counters exposed by CachingBackend: generate() calls answered without the
/// inner backend, calls forwarded to it, and per-sample hit totals.
struct CacheStats {
  long long served_from_cache = 0;
  long long inner_calls = 0;
  long long samples_from_cache = 0;
  long long samples_generated = 0;
};

/// Caches every sample of every generate() call under its per-sample key.
/// When all n_samples keys hit, the inner backend is not consulted at all, so
/// a completed run re-executed with the same seed performs zero backend
/// calls. On any miss the whole block is regenerated and stored before being
/// returned.
class CachingBackend : public ModelBackend {
 public:
  CachingBackend(ModelBackend& inner, ResponseCache& cache)
      : inner_(inner), cache_(cache) {}

  std::vector<std::string> generate(const std::string& prompt,
                                    const BackendParams& params,
                                    const GenerateContext& ctx) override;

  CacheStats stats() const;

 private:
  ModelBackend& inner_;
  ResponseCache& cache_;
  std::atomic<long long> served_from_cache_{0};
  std::atomic<long long> inner_calls_{0};
  std::atomic<long long> samples_from_cache_{0};
  std::atomic<long long> samples_generated_{0};
};

}  // namespace selfalign
