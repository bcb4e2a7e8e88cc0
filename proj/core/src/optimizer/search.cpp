// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/optimizer/search.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <spdlog/spdlog.h>

#include "featopt/agents/prompts.hpp"
#include "featopt/optimizer/score.hpp"
#include "featopt/random.hpp"
#include "featopt/sampling.hpp"
#include "featopt/schema.hpp"

namespace featopt::optimizer {
namespace {

using nlohmann::json;

json example_to_json(const LabeledExample& ex) {
  return {{"id", ex.id}, {"text", ex.text}, {"label", ex.label}};
}

LabeledExample example_from_json(const json& doc) {
  return {doc.at("id").get<std::string>(), doc.at("text").get<std::string>(),
          doc.at("label").get<std::string>()};
}

std::map<lm::ModuleRole, lm::TokenUsage> usage_for(const lm::LmGateway& gateway,
                                                   const std::string& candidate) {
  std::map<lm::ModuleRole, lm::TokenUsage> out;
  const auto ledger = gateway.usage_ledger();
  for (const auto& [key, usage] : ledger.entries())
    if (key.second == candidate) out[key.first] += usage;
  return out;
}

}  // namespace

// --- SearchSpace --------------------------------------------------------------

std::size_t SearchSpace::add_instruction(InstructionEntry entry) {
  if (auto i = find_instruction(entry.text)) return *i;
  instructions.push_back(std::move(entry));
  return instructions.size() - 1;
}

std::optional<std::size_t> SearchSpace::find_instruction(const std::string& text) const {
  for (std::size_t i = 0; i < instructions.size(); ++i)
    if (instructions[i].text == text) return i;
  return std::nullopt;
}

void SearchSpace::validate() const {
  if (instructions.empty()) throw PreconditionFailed("instruction pool is empty");
  if (example_sets.empty()) throw PreconditionFailed("example-set pool is empty");
  std::set<std::string> seen;
  for (const auto& e : instructions) {
    if (e.text.empty()) throw PreconditionFailed("empty instruction in pool");
    if (!seen.insert(e.text).second)
      throw PreconditionFailed("instruction pool contains a repeated instruction");
  }
}

json SearchSpace::to_json() const {
  json ins = json::array();
  for (const auto& e : instructions)
    ins.push_back({{"text", e.text}, {"origin", e.origin}, {"round", e.round}});
  json sets = json::array();
  for (const auto& s : example_sets) {
    json examples = json::array();
    for (const auto& ex : s.examples) examples.push_back(example_to_json(ex));
    sets.push_back({{"set_id", s.set_id}, {"examples", std::move(examples)}});
  }
  return {{"instructions", std::move(ins)}, {"example_sets", std::move(sets)}};
}

SearchSpace SearchSpace::from_json(const json& doc) {
  SearchSpace space;
  for (const auto& e : doc.at("instructions"))
    space.instructions.push_back({e.at("text").get<std::string>(),
                                  e.at("origin").get<std::string>(),
                                  e.at("round").get<std::size_t>()});
  for (const auto& s : doc.at("example_sets")) {
    ExampleSet set;
    set.set_id = s.at("set_id").get<std::size_t>();
    for (const auto& ex : s.at("examples")) set.examples.push_back(example_from_json(ex));
    space.example_sets.push_back(std::move(set));
  }
  return space;
}

// --- OptimizerConfig ----------------------------------------------------------

std::size_t OptimizerConfig::effective_n_iter() const {
  if (n_iter) return *n_iter;
  return std::max<std::size_t>(n_example_sets * n_example_sets, 128);
}

const std::string& OptimizerConfig::effective_seed_instruction() const {
  return seed_instruction.empty() ? agents::default_seed_instruction() : seed_instruction;
}

void OptimizerConfig::validate() const {
  if (n_example_sets < 1) throw ConfigError("n_example_sets must be >= 1");
  if (example_set_size < 1) throw ConfigError("example_set_size must be >= 1");
  if (k_reflect < 1) throw ConfigError("k_reflect must be >= 1");
  if (n_iter && *n_iter < 1) throw ConfigError("n_iter must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (refinement_example_set >= n_example_sets)
    throw ConfigError("refinement_example_set must index a sampled example set");
  if (evaluation.k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (!(evaluation.l2 > 0.0)) throw ConfigError("l2 must be > 0");
  tpe.validate();
  for (const auto* p : {&agents.proposer, &agents.extractor, &agents.scorer, &agents.feedback,
                        &agents.reflective})
    lm::validate(*p);
  if (agents.parse_retries < 0) throw ConfigError("parse_retries must be >= 0");
  if (agents.min_features < 1 || agents.min_features > agents.max_features ||
      agents.max_features > kMaxFeatures)
    throw ConfigError("feature count bounds must satisfy 1 <= min <= max <= 32");
}

// --- evaluate_candidate -------------------------------------------------------

TrialRecord evaluate_candidate(std::size_t trial_index, const PromptCandidate& candidate,
                               const std::string& phase, const SearchSpace& space,
                               const DatasetSplits& splits, lm::LmGateway& gateway,
                               const OptimizerConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  TrialRecord t;
  t.index = trial_index;
  t.candidate = candidate;
  t.phase = phase;
  const std::string id = t.candidate_id();

  auto abort = [&](const char* reason, const std::string& what) {
    t.status = TrialStatus::kAborted;
    t.abort_reason = reason;
    t.error = what;
    t.combined_score.reset();
    spdlog::info("{} aborted ({}): {}", id, reason, what);
  };

  try {
    if (candidate.instruction_id >= space.instructions.size() ||
        candidate.example_set_id >= space.example_sets.size())
      throw PreconditionFailed("candidate indices outside the search space");
    const auto& instruction = space.instructions[candidate.instruction_id].text;
    const auto& examples = space.example_sets[candidate.example_set_id];

    auto settings = config.agents;
    settings.proposer.seed = static_cast<std::int64_t>(
        derive_seed(config.seed, static_cast<std::uint64_t>(trial_index)) >> 1);

    // Proposal.
    FeatureSet fs;
    try {
      fs = agents::propose_features(gateway, instruction, examples, splits.class_names,
                                    settings, id);
    } catch (const lm::SchemaViolation& e) {
      abort(kProposalFailed, e.what());
    } catch (const ValidationFailed& e) {
      abort(kProposalFailed, e.what());
    } catch (const lm::TransportError& e) {
      abort(kGatewayUnavailable, e.what());
    } catch (const lm::EndpointRejected& e) {
      abort(kGatewayUnavailable, e.what());
    }
    if (!t.abort_reason.empty()) {
      t.usage = usage_for(gateway, id);
      t.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      return t;
    }
    t.features = fs;

    // Realization and dataset-level metrics.
    auto matrix =
        agents::extract_all(gateway, splits.annotation, fs, splits.class_names, settings, id);
    auto eval = config.evaluation;
    eval.seed = config.seed;
    t.metrics = metrics::compute_metrics(matrix, eval);
    t.f1_score = t.metrics->macro_f1;

    if (!t.metrics->ok) {
      abort(kMetricsFailed, t.metrics->note);
    } else {
      try {
        auto report = agents::score_interpretability(gateway, fs, splits.class_names,
                                                     t.metrics->leaked_features(), settings, id);
        t.interpretability = std::move(report.per_feature);
        t.interpretability_score = report.set_score;
        t.interp_feedback = std::move(report.feedback_text);
      } catch (const lm::SchemaViolation& e) {
        t.interp_feedback = "interpretability scoring failed";
        abort(kInterpretabilityFailed, e.what());
      } catch (const lm::TransportError& e) {
        t.interp_feedback = "interpretability scoring failed";
        abort(kInterpretabilityFailed, e.what());
      } catch (const lm::EndpointRejected& e) {
        t.interp_feedback = "interpretability scoring failed";
        abort(kInterpretabilityFailed, e.what());
      }
      t.perf_feedback = agents::performance_feedback(gateway, *t.metrics, settings, id);
      if (t.abort_reason.empty()) {
        t.status = TrialStatus::kOk;
        t.combined_score = combined_score(t.f1_score, t.interpretability_score, config.lambda);
      }
    }
  } catch (const std::exception& e) {
    abort(kInternalError, e.what());
  }
  t.usage = usage_for(gateway, id);
  t.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (t.ok())
    spdlog::info("{} [{}] instruction {} set {}: combined {:.4f} (f1 {:.4f}, interp {:.4f})",
                 id, phase, candidate.instruction_id, candidate.example_set_id,
                 *t.combined_score, t.f1_score, t.interpretability_score);
  return t;
}

// --- optimize -----------------------------------------------------------------

std::optional<FeatureSet> OptimizeResult::final_features() const {
  const auto* b = best_trial();
  if (!b) return std::nullopt;
  return b->features;
}

OptimizeResult optimize(const DatasetSplits& splits, lm::LmGateway& gateway,
                        const OptimizerConfig& config, const TrialCallback& on_trial,
                        const ResumeState* resume) {
  config.validate();
  validate_splits(splits);

  OptimizeResult result;
  auto sets = sample_example_sets(splits.train, config.n_example_sets,
                                  config.example_set_size, derive_seed(config.seed, "sets"),
                                  config.stratified_example_sets);
  if (resume) {
    if (resume->space.example_sets.size() != sets.size())
      throw ConfigError("resumed run used a different number of example sets");
    for (std::size_t s = 0; s < sets.size(); ++s)
      if (resume->space.example_sets[s].examples != sets[s].examples)
        throw ConfigError("resumed run used different example sets; check seed and data");
    result.space = resume->space;
    for (std::size_t i = 0; i < resume->trials.size(); ++i)
      if (resume->trials[i].index != i)
        throw ConfigError("resumed trial log is not contiguous at index " + std::to_string(i));
  } else {
    result.space.example_sets = std::move(sets);
    result.space.add_instruction({config.effective_seed_instruction(), "seed", 0});
  }
  auto& space = result.space;
  auto& trials = result.trials;

  // Evaluates the next trial, or replays it from the resumed log.
  auto run_trial = [&](const PromptCandidate& c, const std::string& phase) -> const TrialRecord& {
    const std::size_t index = trials.size();
    if (resume && index < resume->trials.size()) {
      const auto& old = resume->trials[index];
      if (old.candidate != c || old.phase != phase)
        throw ConfigError("resumed trial " + std::to_string(index) +
                          " does not match the replayed schedule");
      trials.push_back(old);
      return trials.back();
    }
    trials.push_back(evaluate_candidate(index, c, phase, space, splits, gateway, config));
    const auto& t = trials.back();
    // Nothing is reported for a run that never reached the endpoint.
    if (index == 0 && !t.ok() && t.abort_reason == kGatewayUnavailable)
      throw GatewayUnavailable("seed evaluation could not reach the endpoint: " + t.error);
    if (on_trial) on_trial(t, space);
    return trials.back();
  };

  const std::size_t ref_set = config.refinement_example_set;
  run_trial({0, ref_set}, "seed");

  // Reflective refinement rounds, each refreshing feedback on its first new
  // instruction.
  const auto summary = agents::build_data_summary(splits.train, derive_seed(config.seed, "summary"));
  const bool scalar = config.mode == agents::ProposerMode::kScalarOnly;
  std::size_t feedback_trial = 0;
  for (std::size_t round = 1; round <= config.n_feedback_rounds; ++round) {
    std::vector<std::size_t> added;
    for (std::size_t i = 0; i < space.instructions.size(); ++i)
      if (space.instructions[i].round == round) added.push_back(i);

    if (added.empty()) {
      const auto& last = trials[feedback_trial];
      agents::ReflectionRequest req;
      req.summary = summary;
      req.current_instruction = space.instructions[last.candidate.instruction_id].text;
      req.interp_feedback = last.ok() || !last.interp_feedback.empty()
                                ? last.interp_feedback
                                : "The candidate failed (" + last.abort_reason + ").";
      req.perf_feedback = last.perf_feedback.empty()
                              ? "No performance measurements: the candidate failed (" +
                                    last.abort_reason + ")."
                              : last.perf_feedback;
      req.combined_score = last.objective();
      req.k = config.k_reflect;
      req.mode = config.mode;
      const auto proposals = agents::reflect_instructions(
          gateway, req, config.agents, "reflect-" + std::to_string(round));
      for (const auto& text : proposals) {
        if (space.find_instruction(text)) continue;
        added.push_back(space.add_instruction({text, scalar ? "scalar" : "reflective", round}));
      }
    }
    if (added.empty()) {
      spdlog::warn("refinement round {} produced no new instruction", round);
      continue;
    }
    run_trial({added.front(), ref_set}, "refresh");
    feedback_trial = trials.size() - 1;
  }

  // TPE search over the pool product, each pair at most once.
  TpeState tpe(config.tpe, derive_seed(config.seed, "tpe"));
  std::set<PromptCandidate> evaluated;
  for (const auto& t : trials) {
    tpe.observe(t.candidate, t.objective());
    evaluated.insert(t.candidate);
  }
  const std::size_t budget = config.effective_n_iter();
  while (trials.size() < budget && evaluated.size() < space.product_size()) {
    auto c = tpe_suggest(tpe, space.instructions.size(), space.example_sets.size());
    if (evaluated.count(c)) throw Error("sampler repeated an evaluated pair");
    const auto& t = run_trial(c, "search");
    tpe.observe(t.candidate, t.objective());
    evaluated.insert(c);
  }

  result.best = best_trial(trials);
  return result;
}

}  // namespace featopt::optimizer
