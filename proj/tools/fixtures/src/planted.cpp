// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/fixtures/planted.hpp"

#include <fmt/format.h>

#include "featopt/agents/prompts.hpp"
#include "featopt/random.hpp"
#include "featopt/schema.hpp"

namespace featopt::fixtures {
namespace {

using nlohmann::json;

const std::vector<std::string> kClasses = {"elevated", "routine", "urgent"};

std::string class_for(int level) {
  switch (level) {
    case 0: return "routine";
    case 1: return "elevated";
    default: return "urgent";
  }
}

FeatureDefinition boolean(std::string name, std::string description, std::string prompt) {
  return {std::move(name), FeatureValueType::boolean(), std::move(description),
          std::move(prompt)};
}

const std::vector<FeatureDefinition>& planted_definitions() {
  static const std::vector<FeatureDefinition> defs = {
      boolean("mentions_deadline", "The ticket names a deadline the fix must meet.",
              "Answer true if the text mentions a deadline or due date, else false."),
      boolean("mentions_outage", "The ticket reports a service being down for everyone.",
              "Answer true if the text says a system is down or failing for all users."),
      boolean("polite_greeting", "The ticket opens with a greeting.",
              "Answer true if the text starts with a greeting such as hello or hi."),
      boolean("includes_order_number", "The ticket quotes an order number.",
              "Answer true if the text contains an order number."),
      boolean("mentions_weekend", "The ticket says the problem began over the weekend.",
              "Answer true if the text mentions the weekend."),
      boolean("uses_exclamation", "The ticket contains an exclamation mark.",
              "Answer true if the text contains the character '!'."),
  };
  return defs;
}

const std::vector<std::vector<std::string>> kPhrases = {
    {"We need this fixed before Friday's deadline.", "The client deadline is tomorrow morning.",
     "Our filing deadline is at the end of the day.", "This is due to the auditors by Monday."},
    {"The whole dashboard is down for every user.", "Our servers have been unreachable since noon.",
     "Checkout is failing for all customers.", "Nobody in the company can log in at all."},
    {"Hello team,", "Hi there,", "Good morning,", "Hello support,"},
    {"Order number A-{} is affected.", "This concerns order number B-{}.",
     "See order number C-{} for details."},
    {"It started over the weekend.", "We first noticed it on the weekend.",
     "Things broke sometime during the weekend."},
    {"Please help!", "This is really frustrating!", "Thanks in advance!"},
};

const std::vector<std::string> kFiller = {
    "I tried clearing the cache.",
    "The export button shows a spinner.",
    "Screenshots are attached.",
    "My colleague sees the same thing.",
    "We are on the standard plan.",
    "The mobile app behaves the same way.",
    "I restarted the browser twice.",
    "Our account manager is copied.",
    "The report totals look wrong.",
    "The invoice page loads slowly.",
};

template <typename T>
const T& pick(const std::vector<T>& pool, Rng& rng) {
  return pool[uniform_index(rng, pool.size())];
}

json score_block(int score, bool leak, const std::string& rationale) {
  return {{"readable", score},   {"human_worded", score}, {"understandable", score},
          {"meaningful", score}, {"trackable", score},    {"leakage", leak},
          {"rationale", rationale}};
}

json rule(std::string name, json match, json responses) {
  return {{"name", std::move(name)}, {"match", std::move(match)},
          {"responses", std::move(responses)}};
}

json reply(const json& body) { return {{"text", body.dump()}}; }

std::string marker(lm::ModuleRole role, bool scalar = false) {
  return agents::module_marker(role, scalar);
}

}  // namespace

PlantedCorpus make_planted_corpus(const CorpusOptions& options) {
  PlantedCorpus corpus;
  corpus.class_names = kClasses;
  Rng rng(derive_seed(options.seed, "planted-corpus"));
  for (std::size_t i = 0; i < options.n_records; ++i) {
    HiddenRow h{};
    for (auto& b : h) b = uniform_index(rng, 2) == 1;

    std::vector<std::string> body;
    for (std::size_t f = 0; f < kPlantedCount; ++f) {
      if (!h[f] || f == 2 || f == 5) continue;  // greeting and closing placed below
      std::string s = pick(kPhrases[f], rng);
      if (f == 3) s = fmt::format(fmt::runtime(s), 10000 + uniform_index(rng, 90000));
      body.push_back(std::move(s));
    }
    const std::size_t n_filler = 1 + uniform_index(rng, 2);
    for (std::size_t j = 0; j < n_filler; ++j) body.push_back(pick(kFiller, rng));
    shuffle(body, rng);

    std::string text = h[2] ? pick(kPhrases[2], rng) + " " : std::string();
    text += fmt::format("Ticket {}.", 1000 + i);
    for (const auto& s : body) text += " " + s;
    text += h[5] ? " " + pick(kPhrases[5], rng) : std::string(" Thanks.");

    const std::string truth = class_for(int(h[kDeadline]) + int(h[kOutage]));
    std::string label = truth;
    if (options.label_noise > 0.0 && uniform_unit(rng) < options.label_noise) {
      std::vector<std::string> others;
      for (const auto& c : kClasses)
        if (c != truth) others.push_back(c);
      label = pick(others, rng);
    }
    corpus.records.push_back({fmt::format("t{:04d}", i), std::move(text), label});
    corpus.hidden.push_back(h);
    corpus.true_labels.push_back(truth);
  }
  return corpus;
}

FeatureSet planted_schema() { return {planted_definitions()}; }

FeatureSet weak_schema() {
  FeatureSet fs;
  for (std::size_t f = 2; f < kPlantedCount; ++f) fs.features.push_back(planted_definitions()[f]);
  return fs;
}

FeatureSet leaky_schema() {
  FeatureSet fs = planted_schema();
  fs.features.push_back({"priority_label", FeatureValueType::categorical(kClasses),
                         "The priority class of the ticket.",
                         "Answer with the ticket's priority: routine, elevated or urgent."});
  return fs;
}

const std::string& refined_phrase() {
  static const std::string p = "deadline pressure and service outages";
  return p;
}

const std::string& leaky_phrase() {
  static const std::string p = "state the ticket priority directly";
  return p;
}

std::vector<std::string> refined_instructions(std::size_t k) {
  static const std::vector<std::string> stems = {
      "Propose 6 checkable properties of each support ticket, paying attention to {}.",
      "List between 5 and 10 text-grounded ticket properties; weigh {} most.",
      "Describe observable ticket details such as greetings, order numbers and {}.",
      "Suggest interpretable Boolean cues of ticket urgency, including {}.",
  };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::string s = fmt::format(fmt::runtime(stems[i % stems.size()]), refined_phrase());
    if (i >= stems.size()) s += fmt::format(" (variant {})", i / stems.size() + 1);
    out.push_back(std::move(s));
  }
  return out;
}

json scripted_transcript(const PlantedCorpus& corpus, const TranscriptOptions& options) {
  json rules = json::array();

  // Extractor: one rule per text, answering every feature any schema uses.
  const auto names = leaky_schema().names();
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    json answer = json::object();
    for (std::size_t f = 0; f < kPlantedCount; ++f) answer[names[f]] = corpus.hidden[i][f];
    answer["priority_label"] = corpus.records[i].label;
    rules.push_back(rule(corpus.records[i].id,
                         {{"role", "user"}, {"equals", "Text:\n" + corpus.records[i].text}},
                         json::array({reply(answer)})));
  }

  const auto proposer = marker(lm::ModuleRole::kFeatureProposer);
  auto schema_reply = [](const FeatureSet& fs) -> json {
    json body = to_json(fs);
    body["reasoning"] = "Properties that can be read directly off a ticket.";
    return reply(body);
  };
  rules.push_back(rule("proposer-leaky", {{"contains", json::array({proposer, leaky_phrase()})}},
                       json::array({schema_reply(leaky_schema())})));
  rules.push_back(rule("proposer-refined",
                       {{"contains", json::array({proposer, refined_phrase()})}},
                       json::array({schema_reply(planted_schema())})));
  rules.push_back(rule("proposer-default", {{"contains", json::array({proposer})}},
                       json::array({schema_reply(weak_schema())})));

  json scores = json::object();
  for (const auto& name : names) {
    const bool leak = name == "priority_label" && options.scorer_flags_leak;
    scores[name] = score_block(options.criterion_score, leak,
                               leak ? "Restates the target label." : "Grounded in the text.");
  }
  rules.push_back(rule(
      "scorer", {{"contains", json::array({marker(lm::ModuleRole::kInterpretabilityScorer)})}},
      json::array({reply({{"reasoning", "Each feature is a concrete textual cue."},
                          {"scores", scores},
                          {"feedback", "Features are concrete and checkable; keep names short."}})})));

  rules.push_back(rule(
      "feedback", {{"contains", json::array({marker(lm::ModuleRole::kPerformanceFeedback)})}},
      json::array({reply({{"reasoning", "Read the table."},
                          {"feedback",
                           "Greeting, order number, weekend and exclamation cues carry little "
                           "signal. Look for deadline pressure and service outages."}})})));

  rules.push_back(rule(
      "refiner", {{"contains", json::array({marker(lm::ModuleRole::kReflectiveProposer)})}},
      json::array({reply({{"reasoning", "Steer toward the cues the feedback names."},
                          {"instructions", refined_instructions(options.k_reflect)}})})));

  return {{"model_id", "scripted-planted"}, {"rules", std::move(rules)}};
}

std::string to_jsonl(const std::vector<LabeledExample>& records) {
  std::string out;
  for (const auto& r : records)
    out += json{{"id", r.id}, {"text", r.text}, {"label", r.label}}.dump() + "\n";
  return out;
}

}  // namespace featopt::fixtures
