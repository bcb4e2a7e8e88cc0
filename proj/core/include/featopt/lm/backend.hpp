// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "featopt/lm/types.hpp"

namespace featopt::lm {

// A single chat-completion transport. Implementations throw TransportError,
// TimeoutError, EndpointRejected or ScriptMiss; they never retry.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion send(const std::vector<ChatMessage>& messages,
                          const GenerationParams& params) = 0;
  virtual std::string model_id() const = 0;
};

}  // namespace featopt::lm
