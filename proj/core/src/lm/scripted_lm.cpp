// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/lm/scripted_lm.hpp"

#include <fstream>

namespace featopt::lm {

using json = nlohmann::json;

bool ScriptMatcher::matches(const std::vector<ChatMessage>& messages) const {
  bool any_role = false;
  bool equals_hit = !equals.has_value();
  for (const auto& m : messages) {
    if (!role.empty() && m.role != role) continue;
    any_role = true;
    if (!equals_hit && m.content == *equals) equals_hit = true;
  }
  if (!any_role || !equals_hit) return false;
  for (const auto& needle : contains) {
    bool found = false;
    for (const auto& m : messages) {
      if (!role.empty() && m.role != role) continue;
      if (m.content.find(needle) != std::string::npos) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

ScriptedLm::ScriptedLm(std::vector<ScriptRule> rules, std::string model_id)
    : rules_(std::move(rules)), model_id_(std::move(model_id)), fired_(rules_.size(), 0) {
  for (const auto& r : rules_) {
    if (r.responses.empty()) {
      throw ConfigError("scripted rule '" + r.name + "' has no responses");
    }
  }
}

namespace {

ScriptedResponse response_from_json(const json& doc) {
  ScriptedResponse r;
  if (doc.is_string()) {
    r.text = doc.get<std::string>();
    return r;
  }
  r.text = doc.value("text", std::string());
  if (doc.contains("error")) r.error = doc.at("error").get<std::string>();
  if (doc.contains("usage")) {
    const auto& u = doc.at("usage");
    r.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                         u.value("completion_tokens", std::int64_t{0}), ""};
  }
  return r;
}

[[noreturn]] void raise_simulated(const std::string& error) {
  if (error == "timeout") throw TimeoutError("scripted timeout");
  if (error.rfind("http:", 0) == 0) {
    throw EndpointRejected(std::stoi(error.substr(5)), "scripted HTTP error");
  }
  if (error == "transport-permanent") {
    throw TransportError("scripted permanent transport failure", false);
  }
  throw TransportError("scripted transport failure");
}

}  // namespace

ScriptedLm::ScriptedLm(ScriptedLm&& other) {
  std::lock_guard lock(other.mu_);
  rules_ = std::move(other.rules_);
  model_id_ = std::move(other.model_id_);
  fired_ = std::move(other.fired_);
}

ScriptedLm ScriptedLm::from_json(const json& doc) {
  std::vector<ScriptRule> rules;
  for (const auto& r : doc.at("rules")) {
    ScriptRule rule;
    rule.name = r.value("name", std::string());
    const auto& m = r.at("match");
    rule.match.role = m.value("role", std::string());
    if (m.contains("contains")) {
      rule.match.contains = m.at("contains").get<std::vector<std::string>>();
    }
    if (m.contains("equals")) rule.match.equals = m.at("equals").get<std::string>();
    for (const auto& resp : r.at("responses")) {
      rule.responses.push_back(response_from_json(resp));
    }
    rules.push_back(std::move(rule));
  }
  return ScriptedLm(std::move(rules), doc.value("model_id", std::string("scripted-lm")));
}

ScriptedLm ScriptedLm::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted transcript " + path.string());
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw ConfigError("scripted transcript " + path.string() + " is not valid JSON");
  }
  return from_json(doc);
}

json ScriptedLm::to_json() const {
  json rules = json::array();
  for (const auto& r : rules_) {
    json match = json::object();
    if (!r.match.role.empty()) match["role"] = r.match.role;
    if (!r.match.contains.empty()) match["contains"] = r.match.contains;
    if (r.match.equals) match["equals"] = *r.match.equals;
    json responses = json::array();
    for (const auto& resp : r.responses) {
      json out = json::object();
      if (resp.error) {
        out["error"] = *resp.error;
      } else {
        out["text"] = resp.text;
      }
      if (resp.usage) {
        out["usage"] = {{"prompt_tokens", resp.usage->prompt_tokens},
                        {"completion_tokens", resp.usage->completion_tokens}};
      }
      responses.push_back(std::move(out));
    }
    rules.push_back({{"name", r.name}, {"match", match}, {"responses", responses}});
  }
  return {{"model_id", model_id_}, {"rules", std::move(rules)}};
}

Completion ScriptedLm::send(const std::vector<ChatMessage>& messages,
                            const GenerationParams& /*params*/) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (!rules_[i].match.matches(messages)) continue;
    std::size_t ordinal;
    {
      std::lock_guard lock(mu_);
      ordinal = fired_[i]++;
    }
    const auto& responses = rules_[i].responses;
    const auto& resp = responses[std::min(ordinal, responses.size() - 1)];
    if (resp.error) raise_simulated(*resp.error);
    Completion c;
    c.text = resp.text;
    if (resp.usage) {
      c.usage = *resp.usage;
    } else {
      for (const auto& m : messages) {
        c.usage.prompt_tokens += count_whitespace_tokens(m.content);
      }
      c.usage.completion_tokens = count_whitespace_tokens(resp.text);
    }
    c.usage.model_id = model_id_;
    return c;
  }
  std::string preview = messages.back().content.substr(0, 160);
  throw ScriptMiss("no scripted rule matches request ending with: " + preview);
}

std::vector<std::size_t> ScriptedLm::fire_counts() const {
  std::lock_guard lock(mu_);
  return fired_;
}

}  // namespace featopt::lm
