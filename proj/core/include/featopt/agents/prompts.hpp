// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "featopt/lm/types.hpp"

namespace featopt::agents {

// A versioned prompt asset, e.g. id "extractor.system.v1". Placeholders are
// written {{name}}.
struct PromptTemplate {
  std::string id;
  std::string text;

  // Throws Error on a placeholder without a value.
  std::string render(const std::map<std::string, std::string>& vars) const;
};

const PromptTemplate& prompt_template(std::string_view id);
std::vector<std::string> prompt_template_ids();

// Template ids used by each agent, recorded in run manifests.
struct TemplateIds {
  std::string system;
  std::string user;
};
TemplateIds templates_for(lm::ModuleRole role, bool scalar_only = false);

// The first line of the agent's system prompt. Stable across runs and unique
// per agent, so transcripts can route requests on it.
std::string module_marker(lm::ModuleRole role, bool scalar_only = false);

// The neutral seed instruction shipped with the tool.
const std::string& default_seed_instruction();

}  // namespace featopt::agents
