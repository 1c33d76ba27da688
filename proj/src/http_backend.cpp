#include "selfalign/http_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "selfalign/errors.hpp"
#include "selfalign/rng.hpp"

namespace selfalign {

namespace {

using json = nlohmann::json;

std::string build_request_body(const std::string& prompt,
                               const BackendParams& params) {
  const json body = {
      {"model", params.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"n", params.n_samples},
      {"max_tokens", params.max_new_tokens},
  };
  return body.dump();
}

std::vector<std::string> parse_choices(const std::string& body, int n_samples,
                                       const std::string& probe_id) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& err) {
    throw ProtocolError("probe " + probe_id +
                        ": response body is not JSON: " + err.what());
  }
  if (!doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array()) {
    throw ProtocolError("probe " + probe_id +
                        ": response body has no choices array");
  }
  const json& choices = doc["choices"];
  if (choices.size() != static_cast<std::size_t>(n_samples)) {
    throw ProtocolError("probe " + probe_id + ": expected " +
                        std::to_string(n_samples) + " choices, got " +
                        std::to_string(choices.size()));
  }
  std::vector<std::string> out;
  out.reserve(choices.size());
  for (const json& choice : choices) {
    if (!choice.is_object() || !choice.contains("message") ||
        !choice["message"].is_object() ||
        !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
      throw ProtocolError("probe " + probe_id +
                          ": choice without message.content");
    }
    out.push_back(choice["message"]["content"].get<std::string>());
  }
  return out;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) {
    throw ConfigError("http backend: base_url must not be empty");
  }
  if (cfg_.retry.max_attempts < 1) {
    throw ConfigError("http backend: max_attempts must be at least 1");
  }
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("http backend: environment variable " +
                        cfg_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
  if (!cfg_.sleep_fn) {
    cfg_.sleep_fn = [](std::chrono::milliseconds wait) {
      std::this_thread::sleep_for(wait);
    };
  }
}

void HttpChatBackend::wait_for_rate_limit() {
  if (cfg_.requests_per_minute <= 0) return;
  const auto window = std::chrono::minutes(1);
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(rate_mutex_);
    const auto now = std::chrono::steady_clock::now();
    while (!request_times_.empty() && now - request_times_.front() >= window) {
      request_times_.pop_front();
    }
    if (request_times_.size() <
        static_cast<std::size_t>(cfg_.requests_per_minute)) {
      request_times_.push_back(now);
      return;
    }
    wait = std::chrono::duration_cast<std::chrono::milliseconds>(
               request_times_.front() + window - now) +
           std::chrono::milliseconds(1);
    request_times_.push_back(now + wait);
  }
  cfg_.sleep_fn(wait);
}

std::vector<std::string> HttpChatBackend::generate(const std::string& prompt,
                                                   const BackendParams& params,
                                                   const GenerateContext& ctx) {
  params.validate();
  const std::string body = build_request_body(prompt, params);
  std::string last_failure = "no attempt made";

  for (int attempt = 0; attempt < cfg_.retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      const double scale =
          std::pow(cfg_.retry.multiplier, static_cast<double>(attempt - 1));
      rng::Xoshiro256StarStar gen(rng::derive_seed(
          cfg_.jitter_seed, "retry-jitter", ctx.probe_id,
          static_cast<std::uint64_t>(attempt)));
      const double factor =
          1.0 + cfg_.retry.jitter * (2.0 * gen.next_unit() - 1.0);
      const auto wait = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(cfg_.retry.initial_backoff.count()) * scale *
          factor));
      cfg_.sleep_fn(wait);
    }
    wait_for_rate_limit();

    // One client (and connection) per request keeps concurrent generate()
    // calls independent.
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_write_timeout(cfg_.timeout_seconds, 0);
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

    httplib::Result res = client.Post(cfg_.path, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      return parse_choices(res->body, params.n_samples, ctx.probe_id);
    }
    if (retryable_status(res->status)) {
      last_failure = "status " + std::to_string(res->status);
      continue;
    }
    throw ProtocolError("probe " + ctx.probe_id + ": endpoint returned status " +
                        std::to_string(res->status));
  }
  throw BackendUnavailableError(
      "probe " + ctx.probe_id + ": " + std::to_string(cfg_.retry.max_attempts) +
      " attempts failed; last failure: " + last_failure);
}

}  // namespace selfalign
