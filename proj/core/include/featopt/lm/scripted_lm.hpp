// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/lm/backend.hpp"

namespace featopt::lm {

// Selects requests by message content. A rule matches when, over the messages
// carrying `role` (any role when empty), every `contains` needle occurs in
// one of those messages and, if set, one message equals `equals` exactly.
struct ScriptMatcher {
  std::string role;
  std::vector<std::string> contains;
  std::optional<std::string> equals;

  bool matches(const std::vector<ChatMessage>& messages) const;
};

// A canned reply. `error` simulates a failure instead: "transport",
// "timeout" or "http:<status>".
struct ScriptedResponse {
  std::string text;
  std::optional<TokenUsage> usage;
  std::optional<std::string> error;
};

struct ScriptRule {
  std::string name;
  ScriptMatcher match;
  // The k-th firing of the rule returns responses[k]; past the end, the last
  // response repeats.
  std::vector<ScriptedResponse> responses;
};

// Deterministic transcript-driven backend. The first matching rule wins;
// unmatched requests throw ScriptMiss. Synthetic usage, when a response does
// not carry one, is the whitespace token count of the request and reply.
//
// Transcript JSON:
//   {"model_id": "...", "rules": [{"name": "...",
//     "match": {"role": "user", "contains": ["..."], "equals": "..."},
//     "responses": [{"text": "...", "usage": {"prompt_tokens": 1,
//                    "completion_tokens": 2}} | {"error": "transport"}]}]}
class ScriptedLm : public ChatBackend {
 public:
  explicit ScriptedLm(std::vector<ScriptRule> rules,
                      std::string model_id = "scripted-lm");
  // Takes the rules and fire counts; the moved-from object is left empty.
  ScriptedLm(ScriptedLm&& other);

  static ScriptedLm from_json(const nlohmann::json& doc);
  static ScriptedLm load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  Completion send(const std::vector<ChatMessage>& messages,
                  const GenerationParams& params) override;
  std::string model_id() const override { return model_id_; }

  // Number of times each rule has fired, in rule order.
  std::vector<std::size_t> fire_counts() const;

 private:
  std::vector<ScriptRule> rules_;
  std::string model_id_;
  mutable std::mutex mu_;
  std::vector<std::size_t> fired_;
};

}  // namespace featopt::lm
