// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

// Must match the core library's httplib configuration.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "featopt/errors.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/lm/http_backend.hpp"

namespace featopt::lm {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

// Minimal chat-completions server: the first `n_throttle` requests get 429.
class FakeServer {
 public:
  explicit FakeServer(int n_throttle) : n_throttle_(n_throttle) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (hits_++ < n_throttle_) {
        res.status = 429;
        res.set_content(R"({"error": "rate limited"})", "application/json");
        return;
      }
      json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}},
                   {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 1}}}};
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::string last_body() const { return last_body_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int n_throttle_;
  std::atomic<int> hits_{0};
  std::string last_body_;
  std::string last_auth_;
};

LmEndpoint endpoint_for(const FakeServer& server) {
  LmEndpoint e;
  e.base_url = server.base_url();
  e.model_id = "test-model";
  e.api_key = "sk-test";
  e.request_timeout = 5000ms;
  return e;
}

TEST(HttpBackend, SucceedsAfterTwoThrottledAttempts) {
  FakeServer server(2);
  GatewayOptions options;
  options.retry_base_delay = 1ms;
  options.retry_max_delay = 5ms;
  LmGateway gw(std::make_shared<OpenAiChatBackend>(endpoint_for(server)), options);
  auto c = gw.complete({{"user", "ping"}}, GenerationParams::greedy(16),
                       {ModuleRole::kExtractor, "c", 0});
  EXPECT_EQ(c.text, "pong");
  EXPECT_EQ(c.usage.prompt_tokens, 7);
  EXPECT_EQ(server.hits(), 3);
  auto entries = gw.audit_log().entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries.back().attempt, 2);

  auto body = json::parse(server.last_body());
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["content"], "ping");
  EXPECT_EQ(body["max_tokens"], 16);
  EXPECT_EQ(server.last_auth(), "Bearer sk-test");
}

TEST(HttpBackend, ThrottleSurfacesAsRetryableRejection) {
  FakeServer server(100);
  OpenAiChatBackend backend(endpoint_for(server));
  try {
    backend.send({{"user", "ping"}}, {});
    FAIL() << "expected EndpointRejected";
  } catch (const EndpointRejected& e) {
    EXPECT_EQ(e.status(), 429);
    EXPECT_TRUE(e.retryable());
  }
}

TEST(HttpBackend, UnreachableEndpointIsTransportError) {
  LmEndpoint e;
  e.base_url = "http://127.0.0.1:1/v1";
  e.model_id = "m";
  e.request_timeout = 1000ms;
  OpenAiChatBackend backend(e);
  EXPECT_THROW(backend.send({{"user", "ping"}}, {}), TransportError);
}

TEST(HttpBackend, RequestBodyAndResponseParsing) {
  GenerationParams p{0.75, 0.95, 2048, 7};
  auto body = OpenAiChatBackend::build_request_body("m", {{"system", "s"}, {"user", "u"}}, p);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(body["top_p"].get<double>(), 0.95);
  EXPECT_EQ(body["seed"], 7);
  EXPECT_EQ(body["messages"].size(), 2u);

  auto c = OpenAiChatBackend::parse_response_body(
      R"({"choices":[{"message":{"content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":4}})",
      "m");
  EXPECT_EQ(c.text, "hi");
  EXPECT_EQ(c.usage.total(), 7);
  EXPECT_THROW(OpenAiChatBackend::parse_response_body("{\"choices\": []}", "m"), TransportError);
  EXPECT_THROW(OpenAiChatBackend::parse_response_body("not json", "m"), TransportError);
}

TEST(HttpBackend, BaseUrlNeedsScheme) {
  LmEndpoint e;
  e.base_url = "localhost:8000/v1";
  e.model_id = "m";
  EXPECT_THROW(OpenAiChatBackend{e}, ConfigError);
}

}  // namespace
}  // namespace featopt::lm
