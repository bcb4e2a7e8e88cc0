// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/optimizer/trial.hpp"

#include <fmt/format.h>

#include "featopt/schema.hpp"

namespace featopt::optimizer {
namespace {

using nlohmann::json;

json interp_to_json(const agents::FeatureInterpretability& f) {
  return {{"name", f.name},
          {"readable", f.readable},
          {"human_worded", f.human_worded},
          {"understandable", f.understandable},
          {"meaningful", f.meaningful},
          {"trackable", f.trackable},
          {"leakage_flag", f.leakage_flag},
          {"rationale", f.rationale}};
}

agents::FeatureInterpretability interp_from_json(const json& doc) {
  agents::FeatureInterpretability f;
  f.name = doc.at("name").get<std::string>();
  f.readable = doc.at("readable").get<double>();
  f.human_worded = doc.at("human_worded").get<double>();
  f.understandable = doc.at("understandable").get<double>();
  f.meaningful = doc.at("meaningful").get<double>();
  f.trackable = doc.at("trackable").get<double>();
  f.leakage_flag = doc.at("leakage_flag").get<bool>();
  f.rationale = doc.value("rationale", "");
  return f;
}

}  // namespace

std::string trial_candidate_id(std::size_t index) { return fmt::format("trial-{:04d}", index); }

std::string TrialRecord::candidate_id() const { return trial_candidate_id(index); }

lm::TokenUsage TrialRecord::total_usage() const {
  lm::TokenUsage total;
  for (const auto& [_, u] : usage) total += u;
  return total;
}

json TrialRecord::to_json(bool include_timing) const {
  json doc;
  doc["index"] = index;
  doc["candidate"] = {{"instruction_id", candidate.instruction_id},
                      {"example_set_id", candidate.example_set_id}};
  doc["candidate_id"] = candidate_id();
  doc["phase"] = phase;
  doc["status"] = ok() ? "ok" : "aborted";
  if (!ok()) {
    doc["abort_reason"] = abort_reason;
    doc["error"] = error;
  }
  doc["features"] = features ? featopt::to_json(*features) : json(nullptr);
  if (combined_score) doc["combined_score"] = *combined_score;
  doc["f1_score"] = f1_score;
  doc["interpretability_score"] = interpretability_score;
  json per = json::array();
  for (const auto& f : interpretability) per.push_back(interp_to_json(f));
  doc["interpretability"] = std::move(per);
  doc["interp_feedback"] = interp_feedback;
  doc["perf_feedback"] = perf_feedback;
  doc["metrics"] = metrics ? metrics->to_json() : json(nullptr);
  json u = json::object();
  for (const auto& [role, tokens] : usage) {
    u[std::string(lm::to_string(role))] = {{"prompt_tokens", tokens.prompt_tokens},
                                           {"completion_tokens", tokens.completion_tokens},
                                           {"model_id", tokens.model_id}};
  }
  doc["usage"] = std::move(u);
  if (include_timing) doc["timing"] = {{"wall_seconds", wall_seconds}};
  return doc;
}

TrialRecord TrialRecord::from_json(const json& doc) {
  TrialRecord t;
  t.index = doc.at("index").get<std::size_t>();
  t.candidate.instruction_id = doc.at("candidate").at("instruction_id").get<std::size_t>();
  t.candidate.example_set_id = doc.at("candidate").at("example_set_id").get<std::size_t>();
  t.phase = doc.at("phase").get<std::string>();
  const auto status = doc.at("status").get<std::string>();
  if (status == "ok") {
    t.status = TrialStatus::kOk;
  } else if (status == "aborted") {
    t.status = TrialStatus::kAborted;
  } else {
    throw Error("unknown trial status: " + status);
  }
  t.abort_reason = doc.value("abort_reason", "");
  t.error = doc.value("error", "");
  if (!doc.at("features").is_null()) t.features = validate_feature_set(doc.at("features"));
  if (auto it = doc.find("combined_score"); it != doc.end())
    t.combined_score = it->get<double>();
  if (t.ok() != t.combined_score.has_value())
    throw Error("trial " + std::to_string(t.index) +
                ": combined_score must be present exactly for ok trials");
  t.f1_score = doc.at("f1_score").get<double>();
  t.interpretability_score = doc.at("interpretability_score").get<double>();
  for (const auto& f : doc.at("interpretability")) t.interpretability.push_back(interp_from_json(f));
  t.interp_feedback = doc.at("interp_feedback").get<std::string>();
  t.perf_feedback = doc.at("perf_feedback").get<std::string>();
  if (!doc.at("metrics").is_null()) t.metrics = metrics::MetricsBundle::from_json(doc.at("metrics"));
  for (const auto& [role_name, tokens] : doc.at("usage").items()) {
    auto role = lm::module_role_from_string(role_name);
    if (!role) throw Error("unknown module role in trial usage: " + role_name);
    t.usage[*role] = lm::TokenUsage{tokens.at("prompt_tokens").get<std::int64_t>(),
                                    tokens.at("completion_tokens").get<std::int64_t>(),
                                    tokens.value("model_id", "")};
  }
  if (auto it = doc.find("timing"); it != doc.end())
    t.wall_seconds = it->value("wall_seconds", 0.0);
  return t;
}

std::optional<std::size_t> best_trial(const std::vector<TrialRecord>& trials) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].ok()) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = trials[*best];
    const auto& t = trials[i];
    if (t.objective() > b.objective() ||
        (t.objective() == b.objective() && t.index < b.index))
      best = i;
  }
  return best;
}

}  // namespace featopt::optimizer
