// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/lm/backend.hpp"

namespace featopt::lm {

// OpenAI-compatible chat-completions client:
//   POST {base_url}/chat/completions
//   {model, messages[{role, content}], temperature, top_p, max_tokens[, seed]}
// reading choices[0].message.content and usage.{prompt,completion}_tokens.
class OpenAiChatBackend : public ChatBackend {
 public:
  explicit OpenAiChatBackend(LmEndpoint endpoint);

  Completion send(const std::vector<ChatMessage>& messages,
                  const GenerationParams& params) override;
  std::string model_id() const override { return endpoint_.model_id; }

  static nlohmann::json build_request_body(const std::string& model,
                                           const std::vector<ChatMessage>& messages,
                                           const GenerationParams& params);
  // Throws TransportError(transient=false) on a malformed response body.
  static Completion parse_response_body(const std::string& body,
                                        const std::string& model);

 private:
  LmEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace featopt::lm
