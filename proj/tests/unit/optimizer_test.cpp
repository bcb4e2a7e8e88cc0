// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <gtest/gtest.h>

#include "featopt/errors.hpp"
#include "featopt/fixtures/planted.hpp"
#include "featopt/io/dataset.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/lm/scripted_lm.hpp"
#include "featopt/optimizer/score.hpp"
#include "featopt/optimizer/search.hpp"
#include "featopt/optimizer/tpe.hpp"
#include "featopt/optimizer/trial.hpp"

namespace featopt::optimizer {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

TEST(CombinedScore, WeightedMean) {
  EXPECT_DOUBLE_EQ(combined_score(1.0, 0.5, 0.75), 1.375 / 1.75);
  EXPECT_DOUBLE_EQ(combined_score(0.6, 0.2, 0.0), 0.6);
  EXPECT_DOUBLE_EQ(combined_score(0.8, 0.8, 3.0), 0.8);
  EXPECT_THROW(combined_score(1.1, 0.5, 0.75), PreconditionFailed);
  EXPECT_THROW(combined_score(0.5, -0.1, 0.75), PreconditionFailed);
  EXPECT_THROW(combined_score(0.5, 0.5, -1.0), PreconditionFailed);
}

TEST(Tpe, CategoricalDensityIsSmoothed) {
  auto d = categorical_density({0, 0, 2}, 4, 1.0);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_DOUBLE_EQ(d[0], 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(d[2], 2.0 / 7.0);
  EXPECT_DOUBLE_EQ(d[0] + d[1] + d[2] + d[3], 1.0);
}

std::vector<PromptCandidate> run_sampler(std::uint64_t seed, std::size_t n, double score) {
  TpeState state({}, seed);
  std::vector<PromptCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = tpe_suggest(state, 4, 5);
    out.push_back(c);
    state.observe(c, score);
  }
  return out;
}

TEST(Tpe, SameSeedSameSuggestions) {
  EXPECT_EQ(run_sampler(3, 15, 0.5), run_sampler(3, 15, 0.5));
  EXPECT_NE(run_sampler(3, 15, 0.5), run_sampler(4, 15, 0.5));
}

TEST(Tpe, NeverRepeatsUntilExhausted) {
  // All-zero scores make the posterior flat; suggestions must still cover
  // the grid without repeats.
  auto s = run_sampler(9, 20, 0.0);
  std::set<PromptCandidate> seen(s.begin(), s.end());
  EXPECT_EQ(seen.size(), 20u);
  TpeState state({}, 9);
  for (const auto& c : s) state.observe(c, 0.0);
  auto again = tpe_suggest(state, 4, 5);
  EXPECT_LT(again.instruction_id, 4u);
  EXPECT_LT(again.example_set_id, 5u);
}

TEST(Tpe, RebuiltStateSuggestsTheSame) {
  TpeState a({}, 21);
  for (std::size_t i = 0; i < 12; ++i) {
    auto c = tpe_suggest(a, 6, 6);
    a.observe(c, static_cast<double>(c.instruction_id == 2) + 0.01 * c.example_set_id);
  }
  TpeState b({}, 21);
  for (const auto& o : a.history()) b.observe(o.candidate, o.score);
  EXPECT_EQ(tpe_suggest(a, 6, 6), tpe_suggest(b, 6, 6));
}

TEST(Tpe, ConcentratesOnGoodInstruction) {
  TpeState state({}, 5);
  std::size_t hits_after_startup = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    auto c = tpe_suggest(state, 8, 8);
    if (i >= 10 && c.instruction_id == 3) ++hits_after_startup;
    state.observe(c, c.instruction_id == 3 ? 0.9 : 0.1);
  }
  // Uniform would give about 30 / 8.
  EXPECT_GE(hits_after_startup, 6u);
}

TEST(Tpe, InvalidOptionsRejected) {
  TpeOptions o;
  o.gamma = 1.0;
  EXPECT_THROW(TpeState(o, 0), ConfigError);
  EXPECT_THROW(tpe_suggest(TpeState({}, 0), 0, 3), PreconditionFailed);
}

TrialRecord sample_trial() {
  TrialRecord t;
  t.index = 3;
  t.candidate = {1, 2};
  t.phase = "search";
  t.status = TrialStatus::kOk;
  t.features = fixtures::planted_schema();
  t.combined_score = 0.8;
  t.f1_score = 0.75;
  t.interpretability_score = 0.9;
  t.interpretability = {{"mentions_deadline", 0.9, 0.9, 0.8, 1.0, 0.7, false, "clear"}};
  t.interp_feedback = "ok";
  t.perf_feedback = "fine";
  t.usage[lm::ModuleRole::kExtractor] = {100, 20, "m"};
  t.wall_seconds = 1.5;
  return t;
}

TEST(TrialRecord, JsonRoundTripAndTimingKey) {
  const auto t = sample_trial();
  EXPECT_EQ(t.candidate_id(), "trial-0003");
  auto doc = t.to_json();
  EXPECT_TRUE(doc.contains("timing"));
  EXPECT_FALSE(t.to_json(false).contains("timing"));
  auto back = TrialRecord::from_json(doc);
  EXPECT_EQ(back.to_json(), doc);
  EXPECT_EQ(back.total_usage().total(), 120);
}

TEST(TrialRecord, AbortedObjectiveIsZero) {
  TrialRecord t;
  t.abort_reason = kProposalFailed;
  EXPECT_FALSE(t.ok());
  EXPECT_EQ(t.objective(), 0.0);
  auto back = TrialRecord::from_json(t.to_json());
  EXPECT_EQ(back.abort_reason, kProposalFailed);
  EXPECT_FALSE(back.combined_score.has_value());
}

TEST(BestTrial, HighestEarliestOrNone) {
  std::vector<TrialRecord> trials(4);
  EXPECT_FALSE(best_trial(trials).has_value());
  for (std::size_t i = 0; i < 4; ++i) trials[i].index = i;
  for (std::size_t i : {1u, 2u, 3u}) {
    trials[i].status = TrialStatus::kOk;
    trials[i].combined_score = i == 1 ? 0.5 : 0.7;
  }
  EXPECT_EQ(best_trial(trials), 2u);
}

TEST(SearchSpace, DedupesAndRoundTrips) {
  SearchSpace s;
  s.example_sets = {{0, {{"a", "t", "x"}}}};
  EXPECT_EQ(s.add_instruction({"first", "seed", 0}), 0u);
  EXPECT_EQ(s.add_instruction({"second", "reflective", 1}), 1u);
  EXPECT_EQ(s.add_instruction({"first", "reflective", 1}), 0u);
  EXPECT_EQ(s.product_size(), 2u);
  EXPECT_NO_THROW(s.validate());
  auto back = SearchSpace::from_json(s.to_json());
  EXPECT_EQ(back.instructions, s.instructions);
  EXPECT_EQ(back.example_sets[0].examples, s.example_sets[0].examples);
  s.instructions.push_back({"first", "x", 2});
  EXPECT_THROW(s.validate(), PreconditionFailed);
  EXPECT_THROW(SearchSpace{}.validate(), PreconditionFailed);
}

TEST(OptimizerConfig, IterationBudgetAndValidation) {
  OptimizerConfig c;
  EXPECT_EQ(c.effective_n_iter(), 256u);
  c.n_example_sets = 4;
  EXPECT_EQ(c.effective_n_iter(), 128u);
  c.n_iter = 7;
  EXPECT_EQ(c.effective_n_iter(), 7u);
  EXPECT_FALSE(c.effective_seed_instruction().empty());
  c.refinement_example_set = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c.refinement_example_set = 0;
  c.lambda = -0.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

// --- end-to-end over the planted corpus --------------------------------------

struct PlantedRun {
  explicit PlantedRun(fixtures::TranscriptOptions topts = {}, json extra_rules = json::array()) {
    fixtures::CorpusOptions copts;
    copts.n_records = 300;
    corpus = fixtures::make_planted_corpus(copts);
    splits = io::make_splits(corpus.records, {16, 120}, 7);
    auto transcript = fixtures::scripted_transcript(corpus, topts);
    for (auto& r : transcript["rules"]) extra_rules.push_back(r);
    transcript["rules"] = extra_rules;
    lm = std::make_shared<lm::ScriptedLm>(lm::ScriptedLm::from_json(transcript));
    lm::GatewayOptions o;
    o.retry_base_delay = 1ms;
    o.retry_max_delay = 1ms;
    gateway = std::make_unique<lm::LmGateway>(lm, o);
    config.n_example_sets = 4;
    config.example_set_size = 8;
    config.n_iter = 20;
    config.seed = 7;
  }
  fixtures::PlantedCorpus corpus;
  DatasetSplits splits;
  std::shared_ptr<lm::ScriptedLm> lm;
  std::unique_ptr<lm::LmGateway> gateway;
  OptimizerConfig config;
};

TEST(Optimize, PlantedRunFindsThePlantedSchema) {
  PlantedRun run;
  std::size_t callbacks = 0;
  auto result = optimize(run.splits, *run.gateway, run.config,
                         [&](const TrialRecord&, const SearchSpace&) { ++callbacks; });
  // Seed plus four refined instructions over four example sets.
  EXPECT_EQ(result.space.instructions.size(), 5u);
  ASSERT_EQ(result.trials.size(), 20u);
  EXPECT_EQ(callbacks, 20u);
  EXPECT_EQ(result.trials[0].phase, "seed");
  EXPECT_EQ(result.trials[1].phase, "refresh");
  EXPECT_EQ(result.trials[2].phase, "search");
  std::set<PromptCandidate> pairs;
  for (const auto& t : result.trials) {
    EXPECT_TRUE(t.ok()) << t.candidate_id() << ": " << t.error;
    pairs.insert(t.candidate);
  }
  EXPECT_EQ(pairs.size(), 20u);
  ASSERT_TRUE(result.best_trial());
  EXPECT_EQ(*result.final_features(), fixtures::planted_schema());
  EXPECT_GT(result.best_trial()->f1_score, 0.95);
  EXPECT_LT(result.trials[0].f1_score, 0.6);
}

TEST(Optimize, NoFeedbackRoundsKeepsTheSeedPool) {
  PlantedRun run;
  run.config.n_feedback_rounds = 0;
  auto result = optimize(run.splits, *run.gateway, run.config);
  ASSERT_EQ(result.space.instructions.size(), 1u);
  EXPECT_EQ(result.space.instructions[0].origin, "seed");
  // The pool product caps the search below n_iter.
  EXPECT_EQ(result.trials.size(), 4u);
}

TEST(Optimize, ResumeReplaysRecordedTrials) {
  PlantedRun a;
  auto full = optimize(a.splits, *a.gateway, a.config);
  PlantedRun b;
  ResumeState resume{full.space, {full.trials.begin(), full.trials.begin() + 6}};
  auto resumed = optimize(b.splits, *b.gateway, b.config, {}, &resume);
  ASSERT_EQ(resumed.trials.size(), full.trials.size());
  for (std::size_t i = 0; i < full.trials.size(); ++i)
    EXPECT_EQ(resumed.trials[i].to_json(false), full.trials[i].to_json(false)) << i;
  EXPECT_EQ(resumed.best, full.best);
}

TEST(Optimize, UnreachableEndpointRaises) {
  json rules = json::array({{{"name", "down"},
                             {"match", json::object()},
                             {"responses", {{{"error", "transport"}}}}}});
  auto lm = std::make_shared<lm::ScriptedLm>(lm::ScriptedLm::from_json({{"rules", rules}}));
  lm::GatewayOptions o;
  o.max_retries = 0;
  lm::LmGateway gateway(lm, o);
  PlantedRun run;
  EXPECT_THROW(optimize(run.splits, gateway, run.config), GatewayUnavailable);
}

TEST(EvaluateCandidate, ProposalFailureAborts) {
  json bad = json::array({{{"name", "bad-proposer"},
                           {"match",
                            {{"role", "system"},
                             {"contains", {"You are the Feature Proposer"}}}},
                           {"responses", {{{"text", "I cannot help with that."}}}}}});
  PlantedRun run({}, bad);
  SearchSpace space;
  space.add_instruction({"Find features", "seed", 0});
  space.example_sets = {{0, {run.splits.train.begin(), run.splits.train.begin() + 8}}};
  auto t = evaluate_candidate(0, {0, 0}, "seed", space, run.splits, *run.gateway, run.config);
  EXPECT_FALSE(t.ok());
  EXPECT_EQ(t.abort_reason, kProposalFailed);
  EXPECT_FALSE(t.features.has_value());
  EXPECT_EQ(t.objective(), 0.0);
  EXPECT_GT(t.usage.at(lm::ModuleRole::kFeatureProposer).total(), 0);
}

TEST(EvaluateCandidate, ScorerFailureStillRecordsMetrics) {
  json bad = json::array({{{"name", "bad-scorer"},
                           {"match",
                            {{"role", "system"},
                             {"contains", {"You are the Interpretability Scorer"}}}},
                           {"responses", {{{"text", "{}"}}}}}});
  PlantedRun run({}, bad);
  SearchSpace space;
  space.add_instruction({"Focus on " + fixtures::refined_phrase(), "seed", 0});
  space.example_sets = {{0, {run.splits.train.begin(), run.splits.train.begin() + 8}}};
  auto t = evaluate_candidate(0, {0, 0}, "seed", space, run.splits, *run.gateway, run.config);
  EXPECT_EQ(t.abort_reason, kInterpretabilityFailed);
  ASSERT_TRUE(t.metrics.has_value());
  EXPECT_GT(t.f1_score, 0.9);
  EXPECT_FALSE(t.perf_feedback.empty());
}

TEST(EvaluateCandidate, OutOfRangeCandidateIsInternalError) {
  PlantedRun run;
  SearchSpace space;
  space.add_instruction({"x", "seed", 0});
  auto t = evaluate_candidate(0, {3, 0}, "seed", space, run.splits, *run.gateway, run.config);
  EXPECT_EQ(t.abort_reason, kInternalError);
}

}  // namespace
}  // namespace featopt::optimizer
