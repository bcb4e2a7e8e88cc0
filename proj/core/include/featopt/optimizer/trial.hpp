// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/agents/agents.hpp"
#include "featopt/lm/types.hpp"
#include "featopt/metrics/evaluation.hpp"
#include "featopt/types.hpp"

namespace featopt::optimizer {

enum class TrialStatus { kOk, kAborted };

// Abort reasons recorded in trial logs.
inline constexpr const char* kProposalFailed = "proposal-failed";
inline constexpr const char* kGatewayUnavailable = "gateway-unavailable";
inline constexpr const char* kMetricsFailed = "metrics-failed";
inline constexpr const char* kInterpretabilityFailed = "interpretability-failed";
inline constexpr const char* kInternalError = "internal-error";

struct TrialRecord {
  std::size_t index = 0;
  PromptCandidate candidate;
  std::string phase;  // "seed", "refresh" or "search"
  TrialStatus status = TrialStatus::kAborted;
  std::string abort_reason;
  std::string error;  // diagnostic text for aborted trials

  std::optional<FeatureSet> features;
  std::optional<double> combined_score;  // present iff status is ok
  double f1_score = 0.0;
  double interpretability_score = 0.0;
  std::vector<agents::FeatureInterpretability> interpretability;
  std::string interp_feedback;
  std::string perf_feedback;
  std::optional<metrics::MetricsBundle> metrics;
  std::map<lm::ModuleRole, lm::TokenUsage> usage;
  double wall_seconds = 0.0;

  bool ok() const { return status == TrialStatus::kOk; }
  // The value the sampler sees.
  double objective() const { return ok() ? *combined_score : 0.0; }
  std::string candidate_id() const;
  lm::TokenUsage total_usage() const;

  // Timing lives under "timing" so determinism checks can drop one key.
  nlohmann::json to_json(bool include_timing = true) const;
  static TrialRecord from_json(const nlohmann::json& doc);
};

std::string trial_candidate_id(std::size_t index);

// Highest objective among ok trials, earliest index on ties; nullopt when no
// trial succeeded.
std::optional<std::size_t> best_trial(const std::vector<TrialRecord>& trials);

}  // namespace featopt::optimizer
