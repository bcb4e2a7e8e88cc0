// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "featopt/agents/agents.hpp"
#include "featopt/agents/prompts.hpp"
#include "featopt/errors.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/lm/scripted_lm.hpp"
#include "featopt/schema.hpp"

namespace featopt::agents {
namespace {

using lm::ModuleRole;
using nlohmann::json;
using namespace std::chrono_literals;

json text_reply(const json& body) { return {{"text", body.dump()}}; }

json rule(const std::string& name, json match, std::vector<json> bodies) {
  json responses = json::array();
  for (auto& b : bodies) responses.push_back(b.is_string() ? json{{"text", b}} : text_reply(b));
  return {{"name", name}, {"match", std::move(match)}, {"responses", responses}};
}

json marker_match(ModuleRole role, bool scalar = false) {
  return {{"role", "system"}, {"contains", {module_marker(role, scalar)}}};
}

struct Harness {
  explicit Harness(json rules, int in_flight = 4)
      : lm(std::make_shared<lm::ScriptedLm>(lm::ScriptedLm::from_json({{"rules", rules}}))) {
    lm::GatewayOptions o;
    o.max_in_flight = in_flight;
    o.retry_base_delay = 1ms;
    o.retry_max_delay = 1ms;
    gateway = std::make_unique<lm::LmGateway>(lm, o);
  }
  std::vector<lm::AuditEntry> calls(ModuleRole role) const {
    std::vector<lm::AuditEntry> out;
    for (auto& e : gateway->audit_log().entries())
      if (e.tag.role == role) out.push_back(e);
    return out;
  }
  std::shared_ptr<lm::ScriptedLm> lm;
  std::unique_ptr<lm::LmGateway> gateway;
  AgentSettings settings;
};

json feature_json(const std::string& name, const std::string& type = "bool") {
  return {{"name", name},
          {"type", type},
          {"description", "whether " + name},
          {"extraction_prompt", "Answer for " + name}};
}

json categorical_json(const std::string& name, std::vector<std::string> categories) {
  auto f = feature_json(name, "literal");
  f["categories"] = std::move(categories);
  return f;
}

ExampleSet examples() {
  return {0, {{"e1", "Shares plunged after layoffs", "business"},
              {"e2", "The striker scored twice", "sports"}}};
}

TEST(Prompts, EveryTemplateIsRegisteredAndMarkersAreDistinct) {
  std::set<std::string> markers;
  for (auto role : lm::kAllModuleRoles) {
    auto ids = templates_for(role);
    EXPECT_NO_THROW(prompt_template(ids.system));
    EXPECT_NO_THROW(prompt_template(ids.user));
    markers.insert(module_marker(role));
  }
  EXPECT_EQ(markers.size(), 5u);
  EXPECT_NE(templates_for(ModuleRole::kReflectiveProposer, true).user,
            templates_for(ModuleRole::kReflectiveProposer).user);
  EXPECT_FALSE(default_seed_instruction().empty());
  EXPECT_THROW(prompt_template("no.such.template"), Error);
}

TEST(Prompts, RenderFillsPlaceholdersAndRejectsMissingOnes) {
  const auto& t = prompt_template("extractor.user.v1");
  EXPECT_EQ(t.render({{"text", "hello"}}), "Text:\nhello");
  EXPECT_THROW(t.render({}), Error);
}

TEST(Proposer, ReturnsValidatedFeatures) {
  json features = json::array();
  for (auto n : {"job_loss_indicator", "mentions_team", "score_count", "has_quote",
                 "market_terms", "exclamation"})
    features.push_back(feature_json(n));
  Harness h(json::array({rule("p", marker_match(ModuleRole::kFeatureProposer),
                              {{{"reasoning", "r"}, {"features", features}}})}));
  auto fs = propose_features(*h.gateway, "Find features", examples(), {"business", "sports"},
                             h.settings, "c0");
  EXPECT_EQ(fs.size(), 6u);
  auto call = h.calls(ModuleRole::kFeatureProposer).at(0);
  EXPECT_DOUBLE_EQ(call.params.temperature, 0.75);
  EXPECT_DOUBLE_EQ(call.params.top_p, 0.95);
  const auto& user = call.messages.back().content;
  EXPECT_NE(user.find("Find features"), std::string::npos);
  EXPECT_NE(user.find("Shares plunged after layoffs"), std::string::npos);
}

TEST(Proposer, DuplicateNamesFailValidation) {
  json features = {feature_json("tone"), feature_json("tone")};
  Harness h(json::array({rule("p", marker_match(ModuleRole::kFeatureProposer),
                              {{{"features", features}}})}));
  EXPECT_THROW(propose_features(*h.gateway, "i", examples(), {"business", "sports"}, h.settings,
                                "c0"),
               ValidationFailed);
}

TEST(Proposer, UnparseableRepliesFailAfterRetries) {
  Harness h(json::array({rule("p", marker_match(ModuleRole::kFeatureProposer),
                              {json("no json here")})}));
  EXPECT_THROW(propose_features(*h.gateway, "i", examples(), {"business", "sports"}, h.settings,
                                "c0"),
               lm::SchemaViolation);
  EXPECT_EQ(h.calls(ModuleRole::kFeatureProposer).size(), 3u);
}

TEST(Proposer, LongExamplesAreTruncatedNotTheInstruction) {
  json features = json::array();
  for (int i = 0; i < 5; ++i) features.push_back(feature_json("f" + std::to_string(i)));
  Harness h(json::array({rule("p", marker_match(ModuleRole::kFeatureProposer),
                              {{{"features", features}}})}));
  h.settings.context_char_budget = 4000;
  const std::string instruction(1500, 'i');
  ExampleSet big{0, {{"a", std::string(20000, 'x'), "business"},
                     {"b", std::string(20000, 'y'), "sports"}}};
  propose_features(*h.gateway, instruction, big, {"business", "sports"}, h.settings, "c0");
  const auto calls = h.calls(ModuleRole::kFeatureProposer);
  const auto& msgs = calls.at(0).messages;
  std::size_t total = 0;
  for (const auto& m : msgs) total += m.content.size();
  EXPECT_LE(total, 4000u);
  EXPECT_NE(msgs.back().content.find(instruction), std::string::npos);
}

// True when no multi-byte sequence is cut short.
bool complete_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    i += len;
  }
  return true;
}

TEST(FitTexts, CutsLongestFirstOnUtf8Boundaries) {
  auto out = fit_texts_to_budget({"short", std::string(100, 'a'), "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9"},
                                 40);
  std::size_t total = 0;
  for (const auto& t : out) total += t.size();
  EXPECT_LE(total, 40u);
  EXPECT_EQ(out[0], "short");
  EXPECT_EQ(out[1].substr(out[1].size() - 3), "...");
  for (const auto& t : out) EXPECT_TRUE(complete_utf8(t)) << t;

  // An odd cap lands inside a two-byte character and must back off.
  std::string accents;
  for (int i = 0; i < 10; ++i) accents += "\xC3\xA9";
  auto cut = fit_texts_to_budget({accents}, 8);
  EXPECT_EQ(cut[0], "\xC3\xA9\xC3\xA9...");
  EXPECT_TRUE(complete_utf8(cut[0]));
}

FeatureSet job_loss_schema() {
  return validate_feature_set(json::array(
      {feature_json("job_loss_indicator"), categorical_json("tone", {"calm", "alarmed"})}));
}

TEST(Extractor, ParsesJointAnswer) {
  Harness h(json::array(
      {rule("x", {{"role", "user"}, {"equals", "Text:\nShares plunged after layoffs"}},
            {{{"job_loss_indicator", true}, {"tone", "Alarmed"}}})}));
  auto values = extract(*h.gateway, "Shares plunged after layoffs", job_loss_schema(),
                        h.settings, "c0");
  ASSERT_EQ(values.size(), 2u);
  EXPECT_EQ(values[0], FeatureValue(true));
  EXPECT_EQ(values[1], FeatureValue(Category{"alarmed"}));
  auto call = h.calls(ModuleRole::kExtractor).at(0);
  EXPECT_TRUE(call.params.is_greedy());
  EXPECT_NE(call.messages.front().content.find("job_loss_indicator"), std::string::npos);
}

TEST(Extractor, OutOfVocabularyAndMissingKeys) {
  Harness h(json::array({rule("x", marker_match(ModuleRole::kExtractor),
                              {{{"tone", "furious"}}})}));
  auto values = extract(*h.gateway, "t", job_loss_schema(), h.settings, "c0");
  EXPECT_EQ(values[0], FeatureValue(Missing{MissingReason::kParseFailed}));
  EXPECT_EQ(values[1], FeatureValue(Missing{MissingReason::kOutOfVocabulary}));
}

TEST(Extractor, HardFailureGivesRefusedRow) {
  Harness h(json::array({{{"name", "x"},
                          {"match", marker_match(ModuleRole::kExtractor)},
                          {"responses", {{{"error", "http:400"}}}}}}));
  auto values = extract(*h.gateway, "t", job_loss_schema(), h.settings, "c0");
  for (const auto& v : values)
    EXPECT_EQ(v, FeatureValue(Missing{MissingReason::kExtractionRefused}));
}

TEST(Extractor, GarbageGivesParseFailedRow) {
  Harness h(json::array({rule("x", marker_match(ModuleRole::kExtractor), {json("sorry")})}));
  auto values = extract(*h.gateway, "t", job_loss_schema(), h.settings, "c0");
  for (const auto& v : values) EXPECT_EQ(v, FeatureValue(Missing{MissingReason::kParseFailed}));
}

TEST(ExtractAll, OneCallPerRowInInputOrder) {
  json rules = json::array();
  std::vector<LabeledExample> annotation;
  FeatureSet fs{{{"row_number", FeatureValueType::integer(), "d", "p"}}};
  for (int i = 0; i < 512; ++i) {
    const auto text = "text number " + std::to_string(i);
    annotation.push_back({"id" + std::to_string(i), text, i % 2 ? "a" : "b"});
    rules.push_back(rule("r" + std::to_string(i), {{"role", "user"}, {"equals", "Text:\n" + text}},
                         {{{"row_number", i}}}));
  }
  Harness h(rules, 8);
  auto m = extract_all(*h.gateway, annotation, fs, {"a", "b"}, h.settings, "c0");
  ASSERT_EQ(m.num_rows(), 512u);
  for (std::size_t i = 0; i < 512; ++i) {
    EXPECT_EQ(m.rows()[i].id, annotation[i].id);
    EXPECT_EQ(m.rows()[i].values[0], FeatureValue(std::int64_t(i)));
  }
  EXPECT_EQ(h.calls(ModuleRole::kExtractor).size(), 512u);
  EXPECT_GT(h.gateway->usage_ledger().for_role(ModuleRole::kExtractor).total(), 0);
  EXPECT_LE(h.gateway->peak_in_flight(), 8);
}

TEST(ExtractAll, TotalFailureStillYieldsEveryRow) {
  Harness h(json::array({{{"name", "x"},
                          {"match", marker_match(ModuleRole::kExtractor)},
                          {"responses", {{{"error", "http:403"}}}}}}));
  std::vector<LabeledExample> annotation;
  for (int i = 0; i < 20; ++i) annotation.push_back({"id" + std::to_string(i), "t", "a"});
  auto m = extract_all(*h.gateway, annotation, job_loss_schema(), {"a", "b"}, h.settings, "c0");
  EXPECT_EQ(m.num_rows(), 20u);
}

TEST(ExtractAll, EmptySchemaRejected) {
  Harness h(json::array());
  EXPECT_THROW(extract_all(*h.gateway, {{"a", "t", "a"}}, FeatureSet{}, {"a", "b"}, h.settings, "c"),
               ValidationFailed);
}

json criteria(int v, bool leak = false) {
  return {{"readable", v},   {"human_worded", v}, {"understandable", v},
          {"meaningful", v}, {"trackable", v},    {"leakage", leak}};
}

TEST(Scorer, HintedFeatureIsFlaggedAndContributesZero) {
  auto fs = validate_feature_set(json::array(
      {feature_json("job_loss_indicator"),
       categorical_json("sentiment_label", {"positive", "negative"})}));
  Harness h(json::array({rule("s", marker_match(ModuleRole::kInterpretabilityScorer),
                              {{{"scores",
                                 {{"job_loss_indicator", criteria(10)},
                                  {"sentiment_label", criteria(10)}}},
                                {"feedback", "fine"}}})}));
  auto report = score_interpretability(*h.gateway, fs, {"positive", "negative"},
                                       {"sentiment_label"}, h.settings, "c0");
  ASSERT_EQ(report.per_feature.size(), 2u);
  EXPECT_FALSE(report.per_feature[0].leakage_flag);
  EXPECT_TRUE(report.per_feature[1].leakage_flag);
  EXPECT_DOUBLE_EQ(report.set_score, 0.5);
  EXPECT_EQ(report.feedback_text, "fine");
  EXPECT_DOUBLE_EQ(report.set_score, interpretability_set_score(report.per_feature));
}

TEST(Scorer, PerfectSetScoresOne) {
  std::vector<FeatureInterpretability> f(4);
  for (auto& x : f) x.readable = x.human_worded = x.understandable = x.meaningful = x.trackable = 1;
  EXPECT_DOUBLE_EQ(interpretability_set_score(f), 1.0);
}

TEST(Scorer, OutOfRangeScoresRejected) {
  auto fs = validate_feature_set(json::array({feature_json("a")}));
  Harness h(json::array({rule("s", marker_match(ModuleRole::kInterpretabilityScorer),
                              {{{"scores", {{"a", criteria(11)}}}, {"feedback", "x"}}})}));
  EXPECT_THROW(score_interpretability(*h.gateway, fs, {"p", "q"}, {}, h.settings, "c0"),
               lm::SchemaViolation);
}

metrics::MetricsBundle bundle_with_dead_feature() {
  metrics::MetricsBundle b;
  b.ok = true;
  b.macro_f1 = 0.7;
  b.class_names = {"a", "b"};
  b.per_feature = {{"useful_signal", 0.8, 0.3, 1.0, false, {}},
                   {"never_seen", 0.0, 0.0, 0.0, false, {}}};
  return b;
}

TEST(PerformanceFeedback, NamesZeroCoverageFeatures) {
  Harness h(json::array({rule("f", marker_match(ModuleRole::kPerformanceFeedback),
                              {{{"feedback", "Keep useful_signal."}}})}));
  auto text = performance_feedback(*h.gateway, bundle_with_dead_feature(), h.settings, "c0");
  EXPECT_NE(text.find("Keep useful_signal."), std::string::npos);
  EXPECT_NE(text.find("never_seen"), std::string::npos);
  EXPECT_EQ(text, performance_feedback(*h.gateway, bundle_with_dead_feature(), h.settings, "c0"));
  auto user = h.calls(ModuleRole::kPerformanceFeedback).at(0).messages.back().content;
  EXPECT_NE(user.find("useful_signal"), std::string::npos);
}

TEST(PerformanceFeedback, FallsBackWithoutTheModel) {
  Harness h(json::array({{{"name", "f"},
                          {"match", marker_match(ModuleRole::kPerformanceFeedback)},
                          {"responses", {{{"error", "http:400"}}}}}}));
  auto text = performance_feedback(*h.gateway, bundle_with_dead_feature(), h.settings, "c0");
  EXPECT_EQ(text, fallback_performance_feedback(bundle_with_dead_feature()));
  EXPECT_NE(text.find("never_seen"), std::string::npos);
}

TEST(PerformanceFeedback, EmptyBundleIsAPreconditionFailure) {
  Harness h(json::array());
  EXPECT_THROW(performance_feedback(*h.gateway, {}, h.settings, "c0"), PreconditionFailed);
}

std::vector<LabeledExample> train_3x16() {
  std::vector<LabeledExample> out;
  const char* classes[] = {"business", "sports", "science"};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 16; ++i)
      out.push_back({std::string(classes[c]) + std::to_string(i),
                     std::string("Report about ") + classes[c] + " number " + std::to_string(i) +
                         " with markets players experiments",
                     classes[c]});
  return out;
}

TEST(DataSummary, CountsAndDeterministicSnippets) {
  auto a = build_data_summary(train_3x16(), 4);
  auto b = build_data_summary(train_3x16(), 4);
  ASSERT_EQ(a.class_counts.size(), 3u);
  for (const auto& [name, n] : a.class_counts) EXPECT_EQ(n, 16u) << name;
  EXPECT_EQ(a.snippets, b.snippets);
  EXPECT_EQ(a.render(), b.render());
  EXPECT_GT(a.mean_text_length, 0.0);
}

ReflectionRequest request(ProposerMode mode, std::size_t k) {
  ReflectionRequest r;
  r.summary = build_data_summary(train_3x16(), 1);
  r.current_instruction = "Find features";
  r.interp_feedback = "INTERP-NOTE names are vague";
  r.perf_feedback = "PERF-NOTE coverage is low for the tone feature";
  r.combined_score = 0.625;
  r.k = k;
  r.mode = mode;
  return r;
}

TEST(Reflect, ReflectiveModeReturnsKInstructionsFromFeedback) {
  json instructions = json::array();
  for (int i = 0; i < 4; ++i)
    instructions.push_back("Variant " + std::to_string(i) + ": address names are vague and tone coverage");
  Harness h(json::array({rule("r", marker_match(ModuleRole::kReflectiveProposer),
                              {{{"reasoning", "r"}, {"instructions", instructions}}})}));
  auto out = reflect_instructions(*h.gateway, request(ProposerMode::kReflective, 4), h.settings, "r");
  ASSERT_EQ(out.size(), 4u);
  for (const auto& s : out) EXPECT_NE(s.find("tone"), std::string::npos);
  auto user = h.calls(ModuleRole::kReflectiveProposer).at(0).messages.back().content;
  EXPECT_NE(user.find("INTERP-NOTE"), std::string::npos);
  EXPECT_NE(user.find("PERF-NOTE"), std::string::npos);
}

TEST(Reflect, ScalarModeSeesOnlyTheScore) {
  Harness h(json::array({rule("r", marker_match(ModuleRole::kReflectiveProposer, true),
                              {{{"instructions", {"A sharper instruction"}}}})}));
  auto out = reflect_instructions(*h.gateway, request(ProposerMode::kScalarOnly, 1), h.settings, "r");
  ASSERT_EQ(out, std::vector<std::string>{"A sharper instruction"});
  for (const auto& m : h.calls(ModuleRole::kReflectiveProposer).at(0).messages) {
    EXPECT_EQ(m.content.find("INTERP-NOTE"), std::string::npos);
    EXPECT_EQ(m.content.find("PERF-NOTE"), std::string::npos);
    EXPECT_EQ(m.content.find("names are vague"), std::string::npos);
  }
  EXPECT_NE(h.calls(ModuleRole::kReflectiveProposer).at(0).messages.back().content.find("0.6250"),
            std::string::npos);
}

TEST(Reflect, DuplicatesAreReaskedThenPadded) {
  Harness h(json::array({rule("r", marker_match(ModuleRole::kReflectiveProposer),
                              {{{"instructions", {"Same", "Same", "Find features"}}},
                               {{"instructions", {"Same", "Other"}}}})}));
  auto out = reflect_instructions(*h.gateway, request(ProposerMode::kReflective, 4), h.settings, "r");
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(std::set<std::string>(out.begin(), out.end()).size(), 4u);
  EXPECT_EQ(out[0], "Same");
  EXPECT_EQ(out[1], "Other");
  EXPECT_EQ(h.calls(ModuleRole::kReflectiveProposer).size(), 2u);
  EXPECT_EQ(std::count(out.begin(), out.end(), "Find features"), 0);
}

TEST(Reflect, FailureKeepsCurrentInstruction) {
  Harness h(json::array({rule("r", marker_match(ModuleRole::kReflectiveProposer), {json("nope")})}));
  auto out = reflect_instructions(*h.gateway, request(ProposerMode::kReflective, 4), h.settings, "r");
  EXPECT_EQ(out, std::vector<std::string>{"Find features"});
}

TEST(ProposerMode, Names) {
  EXPECT_EQ(to_string(ProposerMode::kScalarOnly), "scalar");
  EXPECT_EQ(proposer_mode_from_string("scalar_only"), ProposerMode::kScalarOnly);
  EXPECT_EQ(proposer_mode_from_string("reflective"), ProposerMode::kReflective);
  EXPECT_FALSE(proposer_mode_from_string("other").has_value());
}

}  // namespace
}  // namespace featopt::agents
