// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "featopt/errors.hpp"

namespace featopt::lm {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// temperature == 0 encodes greedy decoding.
struct GenerationParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;

  static GenerationParams greedy(int max_tokens) {
    return {0.0, 1.0, max_tokens, std::nullopt};
  }
  bool is_greedy() const { return temperature == 0.0; }
};

// Throws ConfigError unless temperature >= 0, top_p in (0, 1], max_tokens >= 1.
void validate(const GenerationParams& params);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::string model_id;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    if (model_id.empty()) model_id = other.model_id;
    return *this;
  }
};

// The agent a request is made on behalf of.
enum class ModuleRole {
  kFeatureProposer,
  kExtractor,
  kInterpretabilityScorer,
  kPerformanceFeedback,
  kReflectiveProposer,
};

inline constexpr ModuleRole kAllModuleRoles[] = {
    ModuleRole::kFeatureProposer, ModuleRole::kExtractor,
    ModuleRole::kInterpretabilityScorer, ModuleRole::kPerformanceFeedback,
    ModuleRole::kReflectiveProposer};

std::string_view to_string(ModuleRole role);
std::optional<ModuleRole> module_role_from_string(std::string_view text);

// Attribution attached to every request: which agent, for which candidate,
// and which item within that candidate (e.g. the annotation row index).
struct CallTag {
  ModuleRole role = ModuleRole::kFeatureProposer;
  std::string candidate;
  std::int64_t item = 0;
};

struct LmEndpoint {
  std::string base_url;
  std::string model_id;
  std::optional<std::string> api_key;
  std::chrono::milliseconds request_timeout{120'000};
  int max_retries = 3;
  int max_in_flight = 4;
};

struct Completion {
  std::string text;
  TokenUsage usage;
};

// Transport-level failure. Transient failures are retried by the gateway.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool transient = true)
      : Error(what), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

class TimeoutError : public TransportError {
 public:
  explicit TimeoutError(const std::string& what) : TransportError(what, true) {}
};

// Non-2xx HTTP response. 408, 429 and 5xx are retryable.
class EndpointRejected : public Error {
 public:
  EndpointRejected(int status, std::string body)
      : Error("endpoint rejected request with HTTP " + std::to_string(status) +
              ": " + body.substr(0, 512)),
        status_(status),
        body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }
  bool retryable() const {
    return status_ == 408 || status_ == 429 || status_ >= 500;
  }

 private:
  int status_;
  std::string body_;
};

// A scripted backend received a request no rule matches.
class ScriptMiss : public Error {
 public:
  using Error::Error;
};

class SchemaViolation : public Error {
 public:
  explicit SchemaViolation(std::vector<std::string> errors)
      : Error("structured output invalid: " + join(errors)),
        errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
      if (!out.empty()) out += "; ";
      out += e;
    }
    return out;
  }
  std::vector<std::string> errors_;
};

// Whitespace-delimited token count; the proxy used when no tokenizer exists.
std::int64_t count_whitespace_tokens(std::string_view text);

}  // namespace featopt::lm
