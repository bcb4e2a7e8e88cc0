// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/lm/http_backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace featopt::lm {

using json = nlohmann::json;

OpenAiChatBackend::OpenAiChatBackend(LmEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  const std::string& url = endpoint_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint base_url must include a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

json OpenAiChatBackend::build_request_body(const std::string& model,
                                           const std::vector<ChatMessage>& messages,
                                           const GenerationParams& params) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  json body = {{"model", model},
               {"messages", std::move(msgs)},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  return body;
}

Completion OpenAiChatBackend::parse_response_body(const std::string& body,
                                                  const std::string& model) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw TransportError("endpoint returned a non-JSON body", false);
  }
  try {
    Completion c;
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    c.text = content.is_null() ? std::string() : content.get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
      c.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
      c.usage.completion_tokens =
          doc["usage"].value("completion_tokens", std::int64_t{0});
    }
    c.usage.model_id = doc.value("model", model);
    return c;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what(),
                         false);
  }
}

Completion OpenAiChatBackend::send(const std::vector<ChatMessage>& messages,
                                   const GenerationParams& params) {
  httplib::Client client(scheme_host_port_);
  auto timeout = endpoint_.request_timeout;
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                (timeout.count() % 1000) * 1000);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          (timeout.count() % 1000) * 1000);
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                           (timeout.count() % 1000) * 1000);
  httplib::Headers headers;
  if (endpoint_.api_key && !endpoint_.api_key->empty()) {
    headers.emplace("Authorization", "Bearer " + *endpoint_.api_key);
  }
  std::string body = build_request_body(endpoint_.model_id, messages, params).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw TimeoutError("request to " + scheme_host_port_ + path_ +
                         " timed out: " + httplib::to_string(err));
    }
    throw TransportError("request to " + scheme_host_port_ + path_ +
                         " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw EndpointRejected(res->status, res->body);
  }
  return parse_response_body(res->body, endpoint_.model_id);
}

}  // namespace featopt::lm
