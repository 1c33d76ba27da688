#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>

#include "selfalign/backend.hpp"

namespace selfalign {

/// Bounded exponential backoff with multiplicative jitter. The waits before
/// retries are initial_backoff * multiplier^attempt, each scaled by a
/// deterministic factor drawn uniformly from [1 - jitter, 1 + jitter].
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  double jitter = 0.5;
};

/// Connection settings for a generic chat-completion HTTP gateway.
struct HttpBackendConfig {
  std::string base_url;  // e.g. "https://gateway.example.com"
  std::string path = "/v1/chat/completions";
  /// Name of the environment variable holding the bearer token; empty means
  /// no Authorization header.
  std::string api_key_env;
  RetryPolicy retry;
  /// 0 disables rate limiting.
  int requests_per_minute = 0;
  int timeout_seconds = 60;
  /// Seed for the deterministic retry jitter.
  std::uint64_t jitter_seed = 0;
  /// Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep_fn;
};

/// Samples from a chat-completion endpoint speaking the common wire shape:
/// request {model, messages: [{role: "user", content}], temperature, n,
/// max_tokens}, response {choices: [{message: {content}}, ...]}. Transport
/// failures, 429 and 5xx are retried per the policy and end in
/// BackendUnavailableError; other 4xx and malformed payloads raise
/// ProtocolError immediately. Both errors name the probe.
class HttpChatBackend : public ModelBackend {
 public:
  /// Throws ConfigError when base_url is empty or api_key_env names an unset
  /// environment variable.
  explicit HttpChatBackend(HttpBackendConfig cfg);

  /// Safe for concurrent calls: every request uses its own connection.
  std::vector<std::string> generate(const std::string& prompt,
                                    const BackendParams& params,
                                    const GenerateContext& ctx) override;

 private:
  void wait_for_rate_limit();

  HttpBackendConfig cfg_;
  std::string api_key_;
  std::mutex rate_mutex_;
  std::deque<std::chrono::steady_clock::time_point> request_times_;
};

}  // namespace selfalign
