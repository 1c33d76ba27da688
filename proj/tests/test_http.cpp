#include <doctest.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "selfalign/errors.hpp"
#include "selfalign/http_backend.hpp"

namespace {

using namespace selfalign;
using nlohmann::json;

// An in-process chat-completion endpoint with programmable failure modes.
class TestServer {
 public:
  TestServer() {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  // Number of requests that should fail with 500 before success.
  std::atomic<int> failures_remaining{0};
  // When set, reply 200 with a non-JSON body.
  std::atomic<bool> garbage_mode{false};
  // When set, reply with fewer choices than requested.
  std::atomic<bool> short_mode{false};
  std::atomic<int> requests_seen{0};

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    requests_seen.fetch_add(1);
    if (failures_remaining.fetch_sub(1) > 0) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
      return;
    }
    failures_remaining.store(0);
    if (garbage_mode.load()) {
      res.set_content("not json at all", "text/plain");
      return;
    }
    const json body = json::parse(req.body);
    const int n = body.at("n").get<int>();
    json choices = json::array();
    const int emit = short_mode.load() ? n - 1 : n;
    for (int i = 0; i < emit; ++i) {
      choices.push_back({{"message", {{"content", "important"}}}});
    }
    res.set_content(json{{"choices", choices}}.dump(), "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig make_config(const TestServer& server,
                              std::vector<std::chrono::milliseconds>* sleeps) {
  HttpBackendConfig cfg;
  cfg.base_url = server.base_url();
  cfg.retry.max_attempts = 3;
  cfg.retry.initial_backoff = std::chrono::milliseconds(100);
  cfg.jitter_seed = 7;
  cfg.sleep_fn = [sleeps](std::chrono::milliseconds wait) {
    if (sleeps != nullptr) sleeps->push_back(wait);
  };
  return cfg;
}

BackendParams make_params(int n_samples) {
  BackendParams params;
  params.model_id = "test-model";
  params.temperature = 0.5;
  params.max_new_tokens = 8;
  params.n_samples = n_samples;
  return params;
}

}  // namespace

TEST_CASE("http backend parses a well-formed completion response") {
  TestServer server;
  HttpChatBackend backend(make_config(server, nullptr));
  const auto responses =
      backend.generate("prompt text", make_params(3), {"probe-1", 0});
  REQUIRE(responses.size() == 3);
  for (const auto& response : responses) CHECK(response == "important");
  CHECK(server.requests_seen.load() == 1);
}

TEST_CASE("http backend retries 5xx with jittered backoff, then succeeds") {
  TestServer server;
  server.failures_remaining = 2;
  std::vector<std::chrono::milliseconds> sleeps;
  HttpChatBackend backend(make_config(server, &sleeps));
  const auto responses =
      backend.generate("prompt", make_params(2), {"probe-2", 0});
  REQUIRE(responses.size() == 2);
  CHECK(server.requests_seen.load() == 3);
  REQUIRE(sleeps.size() == 2);
  // Exponential base 100ms, 200ms with jitter in [0.5, 1.5].
  CHECK(sleeps[0].count() >= 50);
  CHECK(sleeps[0].count() <= 150);
  CHECK(sleeps[1].count() >= 100);
  CHECK(sleeps[1].count() <= 300);
}

TEST_CASE("http backend gives up after max_attempts") {
  TestServer server;
  server.failures_remaining = 100;
  HttpChatBackend backend(make_config(server, nullptr));
  try {
    backend.generate("prompt", make_params(1), {"probe-3", 0});
    FAIL("expected BackendUnavailableError");
  } catch (const BackendUnavailableError& err) {
    const std::string what = err.what();
    CHECK(what.find("probe-3") != std::string::npos);
  }
  CHECK(server.requests_seen.load() == 3);
}

TEST_CASE("malformed payloads raise ProtocolError without retries") {
  TestServer server;
  server.garbage_mode = true;
  HttpChatBackend backend(make_config(server, nullptr));
  CHECK_THROWS_AS(backend.generate("prompt", make_params(1), {"probe-4", 0}),
                  ProtocolError);
  CHECK(server.requests_seen.load() == 1);
}

TEST_CASE("a short choices array raises ProtocolError") {
  TestServer server;
  server.short_mode = true;
  HttpChatBackend backend(make_config(server, nullptr));
  CHECK_THROWS_AS(backend.generate("prompt", make_params(4), {"probe-5", 0}),
                  ProtocolError);
}

TEST_CASE("configuration errors surface at construction") {
  HttpBackendConfig no_url;
  CHECK_THROWS_AS(HttpChatBackend{no_url}, ConfigError);
  HttpBackendConfig bad_env;
  bad_env.base_url = "http://localhost:1";
  bad_env.api_key_env = "SELFALIGN_TEST_KEY_THAT_IS_NOT_SET";
  CHECK_THROWS_AS(HttpChatBackend{bad_env}, ConfigError);
}

TEST_CASE("an unreachable host exhausts retries") {
  HttpBackendConfig cfg;
  // Reserved TEST-NET-1 address: connections fail fast.
  cfg.base_url = "http://192.0.2.1:9";
  cfg.timeout_seconds = 1;
  cfg.retry.max_attempts = 2;
  cfg.sleep_fn = [](std::chrono::milliseconds) {};
  HttpChatBackend backend(std::move(cfg));
  CHECK_THROWS_AS(backend.generate("prompt", make_params(1), {"probe-6", 0}),
                  BackendUnavailableError);
}
