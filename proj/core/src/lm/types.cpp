// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/lm/types.hpp"

#include <cctype>
#include <cmath>

namespace featopt::lm {

void validate(const GenerationParams& params) {
  if (!(params.temperature >= 0.0) || !std::isfinite(params.temperature)) {
    throw ConfigError("temperature must be >= 0");
  }
  if (!(params.top_p > 0.0 && params.top_p <= 1.0)) {
    throw ConfigError("top_p must be in (0, 1]");
  }
  if (params.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

std::string_view to_string(ModuleRole role) {
  switch (role) {
    case ModuleRole::kFeatureProposer:
      return "feature_proposer";
    case ModuleRole::kExtractor:
      return "extractor";
    case ModuleRole::kInterpretabilityScorer:
      return "interpretability_scorer";
    case ModuleRole::kPerformanceFeedback:
      return "performance_feedback";
    case ModuleRole::kReflectiveProposer:
      return "reflective_proposer";
  }
  return "unknown";
}

std::optional<ModuleRole> module_role_from_string(std::string_view text) {
  for (auto role : kAllModuleRoles) {
    if (to_string(role) == text) return role;
  }
  return std::nullopt;
}

std::int64_t count_whitespace_tokens(std::string_view text) {
  std::int64_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

}  // namespace featopt::lm
