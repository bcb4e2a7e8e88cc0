// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "featopt/lm/gateway.hpp"
#include "featopt/metrics/evaluation.hpp"
#include "featopt/types.hpp"

namespace featopt::agents {

// Per-agent decoding settings. Only the proposer samples; the other agents
// decode greedily.
struct AgentSettings {
  lm::GenerationParams proposer{0.75, 0.95, 2048, std::nullopt};
  lm::GenerationParams extractor = lm::GenerationParams::greedy(512);
  lm::GenerationParams scorer = lm::GenerationParams::greedy(2048);
  lm::GenerationParams feedback = lm::GenerationParams::greedy(1024);
  lm::GenerationParams reflective = lm::GenerationParams::greedy(2048);
  int parse_retries = 2;
  // Requests longer than this (in characters) get their example texts
  // truncated; instructions are never cut.
  std::size_t context_char_budget = 64'000;
  std::size_t min_features = 5;
  std::size_t max_features = 10;
};

// Shortens the longest texts first until the total length fits `budget`
// bytes, cutting on UTF-8 boundaries and marking cuts with "...".
std::vector<std::string> fit_texts_to_budget(std::vector<std::string> texts,
                                             std::size_t budget);

// --- Feature proposer ---------------------------------------------------------

// Throws lm::SchemaViolation when the reply never matches the output shape
// and ValidationFailed when the features break the schema rules.
FeatureSet propose_features(lm::LmGateway& gateway, const std::string& instruction,
                            const ExampleSet& examples,
                            const std::vector<std::string>& class_names,
                            const AgentSettings& settings, const std::string& candidate);

// --- Extractor ----------------------------------------------------------------

// One joint call per text. Fields that fail coercion become Missing; a call
// that fails outright yields a row of Missing(extraction-refused).
std::vector<FeatureValue> extract(lm::LmGateway& gateway, const std::string& text,
                                  const FeatureSet& fs, const AgentSettings& settings,
                                  const std::string& candidate, std::int64_t item = 0);

// Extracts every annotation row with at most gateway.max_in_flight() calls
// outstanding. Rows come back in input order.
FeatureMatrix extract_all(lm::LmGateway& gateway,
                          const std::vector<LabeledExample>& annotation,
                          const FeatureSet& fs,
                          const std::vector<std::string>& class_names,
                          const AgentSettings& settings, const std::string& candidate);

// --- Interpretability scorer --------------------------------------------------

struct FeatureInterpretability {
  std::string name;
  double readable = 0.0;  // each criterion in [0, 1]
  double human_worded = 0.0;
  double understandable = 0.0;
  double meaningful = 0.0;
  double trackable = 0.0;
  bool leakage_flag = false;
  std::string rationale;

  double criteria_mean() const {
    return (readable + human_worded + understandable + meaningful + trackable) / 5.0;
  }
};

struct InterpretabilityReport {
  std::vector<FeatureInterpretability> per_feature;
  double set_score = 0.0;
  std::string feedback_text;
};

// Mean over features of 0 for leaking features, else the criteria mean.
double interpretability_set_score(const std::vector<FeatureInterpretability>& features);

// Features named in `leakage_hints` are always flagged. The set score is
// computed locally. Throws lm::SchemaViolation (or a transport error) on
// failure.
InterpretabilityReport score_interpretability(
    lm::LmGateway& gateway, const FeatureSet& fs,
    const std::vector<std::string>& class_names,
    const std::vector<std::string>& leakage_hints, const AgentSettings& settings,
    const std::string& candidate);

// --- Performance feedback -----------------------------------------------------

std::string render_metrics_table(const metrics::MetricsBundle& metrics);
std::string fallback_performance_feedback(const metrics::MetricsBundle& metrics);

// Never fails: falls back to the templated rendering when the call fails, and
// always names every zero-coverage feature.
std::string performance_feedback(lm::LmGateway& gateway,
                                 const metrics::MetricsBundle& metrics,
                                 const AgentSettings& settings,
                                 const std::string& candidate);

// --- Reflective proposer ------------------------------------------------------

struct DataSummary {
  std::vector<std::pair<std::string, std::size_t>> class_counts;  // by class name
  std::vector<std::pair<std::string, std::vector<std::string>>> snippets;
  double mean_text_length = 0.0;  // characters
  std::vector<std::string> vocabulary_hints;

  std::string render() const;
};

DataSummary build_data_summary(const std::vector<LabeledExample>& train,
                               std::uint64_t seed);

enum class ProposerMode { kReflective, kScalarOnly };

std::string_view to_string(ProposerMode mode);
std::optional<ProposerMode> proposer_mode_from_string(std::string_view text);

struct ReflectionRequest {
  DataSummary summary;
  std::string current_instruction;
  std::string interp_feedback;
  std::string perf_feedback;
  double combined_score = 0.0;
  std::size_t k = 4;
  ProposerMode mode = ProposerMode::kReflective;
};

// Returns exactly k distinct instructions (duplicates are re-asked once, then
// padded with numbered variants), or {current_instruction} when the agent
// fails.
std::vector<std::string> reflect_instructions(lm::LmGateway& gateway,
                                              const ReflectionRequest& request,
                                              const AgentSettings& settings,
                                              const std::string& candidate);

}  // namespace featopt::agents
