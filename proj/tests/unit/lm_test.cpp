// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "featopt/errors.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/lm/scripted_lm.hpp"
#include "featopt/lm/shape.hpp"

namespace featopt::lm {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

GatewayOptions fast_options(int retries = 3, int in_flight = 4) {
  GatewayOptions o;
  o.max_retries = retries;
  o.max_in_flight = in_flight;
  o.retry_base_delay = 1ms;
  o.retry_max_delay = 2ms;
  return o;
}

std::vector<ChatMessage> ask(const std::string& text) { return {{"user", text}}; }

std::shared_ptr<ScriptedLm> scripted(json rules) {
  return std::make_shared<ScriptedLm>(ScriptedLm::from_json({{"rules", std::move(rules)}}));
}

TEST(ScriptedLm, CannedReplyWithSyntheticUsage) {
  auto lm = scripted({{{"name", "hi"},
                       {"match", {{"contains", {"hello"}}}},
                       {"responses", {{{"text", "one two three"}}}}}});
  auto c = lm->send(ask("hello there world"), {});
  EXPECT_EQ(c.text, "one two three");
  EXPECT_EQ(c.usage.prompt_tokens, 3);
  EXPECT_EQ(c.usage.completion_tokens, 3);
}

TEST(ScriptedLm, UnmatchedRequestFailsClosed) {
  auto lm = scripted({{{"name", "hi"},
                       {"match", {{"equals", "exact"}}},
                       {"responses", {{{"text", "x"}}}}}});
  EXPECT_THROW(lm->send(ask("something else"), {}), ScriptMiss);
}

TEST(ScriptedLm, ResponsesAdvanceThenRepeatLast) {
  auto lm = scripted({{{"name", "seq"},
                       {"match", json::object()},
                       {"responses", {{{"text", "a"}}, {{"text", "b"}}}}}});
  EXPECT_EQ(lm->send(ask("q"), {}).text, "a");
  EXPECT_EQ(lm->send(ask("q"), {}).text, "b");
  EXPECT_EQ(lm->send(ask("q"), {}).text, "b");
  EXPECT_EQ(lm->fire_counts(), std::vector<std::size_t>{3});
}

TEST(ScriptedLm, RoleRestrictsMatching) {
  auto lm = scripted({{{"name", "sys"},
                       {"match", {{"role", "system"}, {"contains", {"marker"}}}},
                       {"responses", {{{"text", "ok"}}}}}});
  EXPECT_THROW(lm->send({{"user", "marker"}}, {}), ScriptMiss);
  EXPECT_EQ(lm->send({{"system", "marker"}, {"user", "x"}}, {}).text, "ok");
}

TEST(ScriptedLm, JsonRoundTrip) {
  json doc = {{"model_id", "m"},
              {"rules",
               {{{"name", "r"},
                 {"match", {{"role", "user"}, {"contains", {"a"}}, {"equals", "a b"}}},
                 {"responses", {{{"text", "t"}}, {{"error", "http:503"}}}}}}}};
  auto lm = ScriptedLm::from_json(doc);
  EXPECT_EQ(ScriptedLm::from_json(lm.to_json()).to_json(), lm.to_json());
  EXPECT_EQ(lm.model_id(), "m");
}

// Fails with the given errors in order, then answers.
class FlakyBackend : public ChatBackend {
 public:
  explicit FlakyBackend(std::vector<std::function<void()>> failures)
      : failures_(std::move(failures)) {}
  Completion send(const std::vector<ChatMessage>&, const GenerationParams&) override {
    const auto n = calls_++;
    if (n < failures_.size()) failures_[n]();
    return {"done", {10, 2, "flaky"}};
  }
  std::string model_id() const override { return "flaky"; }
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::function<void()>> failures_;
  std::size_t calls_ = 0;
};

TEST(Gateway, RetriesTransientFailures) {
  auto backend = std::make_shared<FlakyBackend>(std::vector<std::function<void()>>{
      [] { throw EndpointRejected(429, "slow down"); },
      [] { throw EndpointRejected(429, "slow down"); }});
  LmGateway gw(backend, fast_options());
  auto c = gw.complete(ask("q"), {}, {ModuleRole::kExtractor, "c", 0});
  EXPECT_EQ(c.text, "done");
  EXPECT_EQ(backend->calls(), 3u);
  auto entries = gw.audit_log().entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_NE(entries[0].status, "ok");
  EXPECT_EQ(entries[2].status, "ok");
  EXPECT_EQ(entries[2].attempt, 2);
}

TEST(Gateway, NonRetryableRejectionPropagatesAndIsAudited) {
  auto backend = std::make_shared<FlakyBackend>(
      std::vector<std::function<void()>>{[] { throw EndpointRejected(400, "bad request"); }});
  LmGateway gw(backend, fast_options());
  EXPECT_THROW(gw.complete(ask("q"), {}, {}), EndpointRejected);
  EXPECT_EQ(backend->calls(), 1u);
  EXPECT_EQ(gw.audit_log().size(), 1u);
}

TEST(Gateway, GivesUpAfterMaxRetries) {
  auto fail = [] { throw TransportError("connection reset"); };
  auto backend = std::make_shared<FlakyBackend>(
      std::vector<std::function<void()>>{fail, fail, fail, fail});
  LmGateway gw(backend, fast_options(2));
  EXPECT_THROW(gw.complete(ask("q"), {}, {}), TransportError);
  EXPECT_EQ(backend->calls(), 3u);
  EXPECT_EQ(gw.audit_log().size(), 3u);
}

TEST(Gateway, RejectsInvalidGenerationParams) {
  auto backend = std::make_shared<FlakyBackend>(std::vector<std::function<void()>>{});
  LmGateway gw(backend, fast_options());
  GenerationParams bad;
  bad.top_p = 0.0;
  EXPECT_THROW(gw.complete(ask("q"), bad, {}), ConfigError);
}

Shape answer_shape() {
  auto s = Shape::object();
  s.field("answer", Shape::string().non_empty()).field("score", Shape::number().range(0, 1));
  return s;
}

TEST(Structured, ParsesJsonWrappedInProse) {
  auto lm = scripted({{{"name", "r"},
                       {"match", json::object()},
                       {"responses",
                        {{{"text", "Sure! ```json\n{\"answer\": \"yes\", \"score\": 0.5}\n```"}}}}}});
  LmGateway gw(lm, fast_options());
  auto r = gw.complete_structured(ask("q"), {}, answer_shape(), 2, {});
  EXPECT_EQ(r.value.at("answer"), "yes");
  EXPECT_EQ(r.calls, 1);
}

TEST(Structured, RepromptsOnMissingField) {
  auto lm = scripted({{{"name", "r"},
                       {"match", json::object()},
                       {"responses",
                        {{{"text", "{\"answer\": \"yes\"}"}},
                         {{"text", "{\"answer\": \"yes\", \"score\": 1}"}}}}}});
  LmGateway gw(lm, fast_options());
  auto r = gw.complete_structured(ask("q"), {}, answer_shape(), 2, {});
  EXPECT_EQ(r.calls, 2);
  EXPECT_TRUE(answer_shape().validate(r.value).empty());
  EXPECT_EQ(gw.audit_log().size(), 2u);
  // The second round tells the model what was wrong.
  auto second = gw.audit_log().entries()[1];
  EXPECT_EQ(second.structured_round, 1);
  ASSERT_FALSE(second.messages.empty());
  EXPECT_NE(second.messages.back().content.find("score"), std::string::npos);
}

TEST(Structured, AllRoundsInvalidThrowsWithLastErrors) {
  auto lm = scripted({{{"name", "r"},
                       {"match", json::object()},
                       {"responses", {{{"text", "{\"answer\": \"\", \"score\": 7}"}}}}}});
  LmGateway gw(lm, fast_options());
  try {
    gw.complete_structured(ask("q"), {}, answer_shape(), 2, {});
    FAIL() << "expected SchemaViolation";
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.errors().size(), 2u);
  }
  EXPECT_EQ(gw.audit_log().size(), 3u);
}

TEST(Structured, NoJsonAtAll) {
  auto lm = scripted({{{"name", "r"},
                       {"match", json::object()},
                       {"responses", {{{"text", "I cannot help with that."}}}}}});
  LmGateway gw(lm, fast_options());
  EXPECT_THROW(gw.complete_structured(ask("q"), {}, answer_shape(), 0, {}), SchemaViolation);
}

TEST(Shape, ExtractsFirstBalancedObject) {
  auto doc = extract_first_json_object("noise {not json} then {\"a\": {\"b\": \"}\"}} tail");
  ASSERT_TRUE(doc);
  EXPECT_EQ((*doc)["a"]["b"], "}");
  EXPECT_FALSE(extract_first_json_object("no braces").has_value());
}

TEST(Shape, ValidationMessagesCarryPaths) {
  auto s = Shape::object();
  s.field("items", Shape::array(Shape::integer(), 1, 2))
      .field("kind", Shape::string().one_of({"a", "b"}));
  auto errors = s.validate({{"items", {1, 2.5, 3}}, {"kind", "c"}});
  ASSERT_GE(errors.size(), 3u);
  std::string all;
  for (const auto& e : errors) all += e + "\n";
  EXPECT_NE(all.find("/items"), std::string::npos);
  EXPECT_NE(all.find("/kind"), std::string::npos);
  EXPECT_EQ(s.json_schema()["properties"]["kind"]["enum"], json({"a", "b"}));
}

TEST(UsageLedger, SumsPerRoleAndCandidate) {
  UsageLedger ledger;
  for (int i = 0; i < 3; ++i) ledger.add({ModuleRole::kExtractor, "c1", i}, {100, 5, "m"});
  ledger.add({ModuleRole::kFeatureProposer, "c1", 0}, {40, 60, "m"});
  EXPECT_EQ(ledger.for_role(ModuleRole::kExtractor).prompt_tokens, 300);
  EXPECT_EQ(ledger.for_candidate("c1").total(), 415);
  EXPECT_EQ(UsageLedger::from_json(ledger.to_json()).to_json(), ledger.to_json());
  UsageLedger empty;
  EXPECT_TRUE(empty.empty());
  EXPECT_EQ(empty.total().total(), 0);
}

TEST(UsageLedger, MatchesAuditLog) {
  auto lm = scripted({{{"name", "r"},
                       {"match", json::object()},
                       {"responses", {{{"text", "a b c"}}}}}});
  LmGateway gw(lm, fast_options());
  for (int i = 0; i < 5; ++i)
    gw.complete(ask("word " + std::to_string(i)), {}, {ModuleRole::kExtractor, "c", i});
  gw.complete(ask("proposal please"), {}, {ModuleRole::kFeatureProposer, "c", 0});
  const auto ledger = gw.usage_ledger();
  EXPECT_EQ(ledger.to_json(), UsageLedger::from_audit(gw.audit_log().entries()).to_json());
  EXPECT_EQ(ledger.for_role(ModuleRole::kExtractor).prompt_tokens, 10);
  EXPECT_EQ(ledger.for_role(ModuleRole::kExtractor).completion_tokens, 15);
}

// Counts concurrent sends to check the in-flight bound.
class SlowBackend : public ChatBackend {
 public:
  Completion send(const std::vector<ChatMessage>&, const GenerationParams&) override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(5ms);
    --active_;
    return {"ok", {1, 1, "slow"}};
  }
  std::string model_id() const override { return "slow"; }
  int peak() const { return peak_; }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

TEST(Gateway, BoundsRequestsInFlight) {
  auto backend = std::make_shared<SlowBackend>();
  LmGateway gw(backend, fast_options(0, 3));
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&gw, t] {
      for (int i = 0; i < 4; ++i) gw.complete(ask("q"), {}, {ModuleRole::kExtractor, "c", t * 4 + i});
    });
  threads.clear();
  EXPECT_LE(backend->peak(), 3);
  EXPECT_LE(gw.peak_in_flight(), 3);
  EXPECT_GE(gw.peak_in_flight(), 2);
  EXPECT_EQ(gw.audit_log().size(), 32u);
}

TEST(AuditLog, CanonicalOrderIgnoresScheduling) {
  auto run = [](bool reverse) {
    auto lm = scripted({{{"name", "r"},
                         {"match", json::object()},
                         {"responses", {{{"text", "x"}}}}}});
    LmGateway gw(lm, fast_options());
    for (int k = 0; k < 6; ++k) {
      const int i = reverse ? 5 - k : k;
      gw.complete(ask("item " + std::to_string(i)), {}, {ModuleRole::kExtractor, "c", i});
    }
    return gw.audit_log().canonical_json().dump();
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(AuditLog, DigestKeptWhenMessagesDropped) {
  AuditLog log(false);
  AuditEntry e;
  e.messages = ask("secret prompt");
  log.append(e);
  auto stored = log.entries().at(0);
  EXPECT_TRUE(stored.messages.empty());
  EXPECT_EQ(stored.request_digest, request_digest(ask("secret prompt")));
  EXPECT_NE(request_digest(ask("a")), request_digest(ask("b")));
}

}  // namespace
}  // namespace featopt::lm
