// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/agents/prompts.hpp"

#include <map>
#include <mutex>

#include "featopt/errors.hpp"

namespace featopt::agents {
namespace detail {
const std::map<std::string, std::string>& prompt_assets();
}  // namespace detail

namespace {

std::string trim_trailing(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
    s.pop_back();
  return s;
}

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
  static const auto* reg = [] {
    auto* out = new std::map<std::string, PromptTemplate, std::less<>>();
    for (const auto& [id, text] : detail::prompt_assets())
      out->emplace(id, PromptTemplate{id, trim_trailing(text)});
    return out;
  }();
  return *reg;
}

}  // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    auto close = text.find("}}", open + 2);
    if (close == std::string::npos) throw Error("unterminated placeholder in prompt " + id);
    out.append(text, pos, open - pos);
    std::string name = text.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end())
      throw Error("prompt " + id + " has no value for placeholder '" + name + "'");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

const PromptTemplate& prompt_template(std::string_view id) {
  const auto& reg = registry();
  auto it = reg.find(id);
  if (it == reg.end()) throw Error("unknown prompt template: " + std::string(id));
  return it->second;
}

std::vector<std::string> prompt_template_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : registry()) ids.push_back(id);
  return ids;
}

TemplateIds templates_for(lm::ModuleRole role, bool scalar_only) {
  std::string stem;
  switch (role) {
    case lm::ModuleRole::kFeatureProposer: stem = "feature_proposer"; break;
    case lm::ModuleRole::kExtractor: stem = "extractor"; break;
    case lm::ModuleRole::kInterpretabilityScorer: stem = "interpretability_scorer"; break;
    case lm::ModuleRole::kPerformanceFeedback: stem = "performance_feedback"; break;
    case lm::ModuleRole::kReflectiveProposer:
      stem = scalar_only ? "scalar_proposer" : "reflective_proposer";
      break;
  }
  return {stem + ".system.v1", stem + ".user.v1"};
}

std::string module_marker(lm::ModuleRole role, bool scalar_only) {
  const auto& text = prompt_template(templates_for(role, scalar_only).system).text;
  return text.substr(0, text.find('\n'));
}

const std::string& default_seed_instruction() {
  return prompt_template("seed_instruction.v1").text;
}

}  // namespace featopt::agents
