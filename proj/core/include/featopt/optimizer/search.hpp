// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/agents/agents.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/metrics/evaluation.hpp"
#include "featopt/optimizer/tpe.hpp"
#include "featopt/optimizer/trial.hpp"
#include "featopt/types.hpp"

namespace featopt::optimizer {

struct InstructionEntry {
  std::string text;
  std::string origin;  // "seed", "reflective" or "scalar"
  std::size_t round = 0;

  bool operator==(const InstructionEntry&) const = default;
};

struct SearchSpace {
  std::vector<InstructionEntry> instructions;
  std::vector<ExampleSet> example_sets;

  std::size_t product_size() const { return instructions.size() * example_sets.size(); }
  // Index of the instruction, appending it when new.
  std::size_t add_instruction(InstructionEntry entry);
  std::optional<std::size_t> find_instruction(const std::string& text) const;
  // Throws PreconditionFailed on empty pools or repeated instructions.
  void validate() const;

  nlohmann::json to_json() const;
  static SearchSpace from_json(const nlohmann::json& doc);
};

struct OptimizerConfig {
  std::size_t n_example_sets = 16;    // N_d
  std::size_t example_set_size = 16;  // l
  bool stratified_example_sets = false;
  std::size_t n_feedback_rounds = 1;  // N_fb
  std::size_t k_reflect = 4;
  std::optional<std::size_t> n_iter;  // unset: max(N_d^2, 128)
  double lambda = 0.75;
  agents::ProposerMode mode = agents::ProposerMode::kReflective;
  std::size_t refinement_example_set = 0;
  std::string seed_instruction;  // empty: the shipped default
  std::uint64_t seed = 0;
  TpeOptions tpe;
  metrics::EvaluationConfig evaluation;
  agents::AgentSettings agents;

  std::size_t effective_n_iter() const;
  const std::string& effective_seed_instruction() const;
  // Throws ConfigError.
  void validate() const;
};

// Runs one candidate end to end. Never throws: every failure becomes an
// aborted record.
TrialRecord evaluate_candidate(std::size_t trial_index, const PromptCandidate& candidate,
                               const std::string& phase, const SearchSpace& space,
                               const DatasetSplits& splits, lm::LmGateway& gateway,
                               const OptimizerConfig& config);

struct OptimizeResult {
  std::optional<std::size_t> best;  // index into trials
  std::vector<TrialRecord> trials;
  SearchSpace space;

  const TrialRecord* best_trial() const { return best ? &trials[*best] : nullptr; }
  std::optional<FeatureSet> final_features() const;
};

// Called after every trial with the space as it stands, before the next
// trial starts.
using TrialCallback = std::function<void(const TrialRecord&, const SearchSpace&)>;

// Prior progress of an interrupted run. Recorded trials are replayed rather
// than re-evaluated.
struct ResumeState {
  SearchSpace space;
  std::vector<TrialRecord> trials;
};

// Thrown when the seed evaluation cannot reach the endpoint at all.
class GatewayUnavailable : public Error {
 public:
  using Error::Error;
};

OptimizeResult optimize(const DatasetSplits& splits, lm::LmGateway& gateway,
                        const OptimizerConfig& config, const TrialCallback& on_trial = {},
                        const ResumeState* resume = nullptr);

}  // namespace featopt::optimizer
