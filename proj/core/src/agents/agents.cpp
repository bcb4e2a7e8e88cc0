// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/agents/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "featopt/agents/coercion.hpp"
#include "featopt/agents/prompts.hpp"
#include "featopt/random.hpp"
#include "featopt/schema.hpp"

namespace featopt::agents {
namespace {

using lm::ChatMessage;
using lm::ModuleRole;
using lm::Shape;
using nlohmann::json;

// Largest prefix length <= n that does not split a UTF-8 sequence.
std::size_t utf8_floor(const std::string& s, std::size_t n) {
  if (n >= s.size()) return s.size();
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return n;
}

std::string cut(const std::string& s, std::size_t limit) {
  if (s.size() <= limit) return s;
  if (limit < 3) return s.substr(0, utf8_floor(s, limit));
  return s.substr(0, utf8_floor(s, limit - 3)) + "...";
}

std::size_t count_code_points(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void require_valid(const FeatureSet& fs) {
  auto violations = check_feature_set(fs);
  if (!violations.empty()) throw ValidationFailed(std::move(violations));
}

std::string type_label(const FeatureValueType& t) {
  std::string out(to_string(t.kind));
  if (t.kind == ValueKind::kCategorical) out += ": one of " + join(t.categories, " | ");
  return out;
}

// Human-readable schema listing shared by the extractor and the scorer.
std::string render_schema_text(const FeatureSet& fs) {
  std::string out;
  for (const auto& f : fs.features) {
    out += fmt::format("- {} ({}): {}\n  How to extract: {}\n", f.name,
                       type_label(f.value_type), f.description, f.extraction_prompt);
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::vector<ChatMessage> build_messages(ModuleRole role, bool scalar_only,
                                        const std::map<std::string, std::string>& sys,
                                        const std::map<std::string, std::string>& user) {
  auto ids = templates_for(role, scalar_only);
  return {{"system", prompt_template(ids.system).render(sys)},
          {"user", prompt_template(ids.user).render(user)}};
}

std::size_t message_chars(const std::vector<ChatMessage>& messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.content.size();
  return n;
}

Shape proposer_shape(const AgentSettings& settings) {
  Shape def = Shape::object();
  def.field("name", Shape::string().non_empty().describe("snake_case identifier"))
      .field("type", Shape::string().one_of({"bool", "int", "float", "literal"}))
      .field("description", Shape::string().non_empty())
      .field("extraction_prompt", Shape::string().non_empty())
      .field("categories", Shape::array(Shape::string()), false);
  Shape out = Shape::object();
  out.field("reasoning", Shape::string(), false)
      .field("features",
             Shape::array(std::move(def), 1, std::max(settings.max_features, kMaxFeatures)));
  return out;
}

Shape scorer_shape(const FeatureSet& fs) {
  Shape per = Shape::object();
  for (const char* c :
       {"readable", "human_worded", "understandable", "meaningful", "trackable"})
    per.field(c, Shape::number().range(0, 10));
  per.field("leakage", Shape::boolean()).field("rationale", Shape::string(), false);
  Shape scores = Shape::object();
  for (const auto& f : fs.features) scores.field(f.name, per);
  Shape out = Shape::object();
  out.field("reasoning", Shape::string(), false)
      .field("scores", std::move(scores))
      .field("feedback", Shape::string().non_empty());
  return out;
}

Shape feedback_shape() {
  Shape out = Shape::object();
  out.field("reasoning", Shape::string(), false)
      .field("feedback", Shape::string().non_empty());
  return out;
}

Shape reflection_shape(std::size_t k) {
  Shape out = Shape::object();
  out.field("reasoning", Shape::string(), false)
      .field("instructions", Shape::array(Shape::string().non_empty(), 1)
                                 .describe(fmt::format("{} distinct instructions", k)));
  return out;
}

std::string format_number(double v, int digits = 4) {
  return fmt::format("{:.{}f}", v, digits);
}

std::vector<std::string> zero_coverage_features(const metrics::MetricsBundle& m) {
  std::vector<std::string> out;
  for (const auto& f : m.per_feature)
    if (f.coverage == 0.0) out.push_back(f.name);
  return out;
}

}  // namespace

std::vector<std::string> fit_texts_to_budget(std::vector<std::string> texts,
                                             std::size_t budget) {
  std::size_t total = 0;
  for (const auto& t : texts) total += t.size();
  if (total <= budget || texts.empty()) return texts;

  // Water-filling: find the largest per-text cap whose clipped sum fits.
  std::vector<std::size_t> lengths;
  for (const auto& t : texts) lengths.push_back(t.size());
  std::sort(lengths.begin(), lengths.end());
  std::size_t cap = 0;
  std::size_t prefix = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::size_t remaining = lengths.size() - i;
    const std::size_t level = (budget - std::min(budget, prefix)) / remaining;
    if (level < lengths[i]) {
      cap = level;
      break;
    }
    prefix += lengths[i];
    cap = lengths[i];
  }
  for (auto& t : texts) t = cut(t, cap);
  return texts;
}

// --- Feature proposer ---------------------------------------------------------

FeatureSet propose_features(lm::LmGateway& gateway, const std::string& instruction,
                            const ExampleSet& examples,
                            const std::vector<std::string>& class_names,
                            const AgentSettings& settings, const std::string& candidate) {
  if (trim(instruction).empty())
    throw PreconditionFailed("feature proposer instruction must not be empty");
  const Shape shape = proposer_shape(settings);
  const std::map<std::string, std::string> sys{
      {"min_features", std::to_string(settings.min_features)},
      {"max_features", std::to_string(settings.max_features)},
      {"schema", shape.json_schema().dump(2)}};

  auto render = [&](const std::vector<std::string>& texts) {
    std::string block;
    for (std::size_t i = 0; i < examples.examples.size(); ++i) {
      block += fmt::format("[{}] label: {}\n{}\n\n", i + 1, examples.examples[i].label,
                           texts[i]);
    }
    while (!block.empty() && block.back() == '\n') block.pop_back();
    return build_messages(ModuleRole::kFeatureProposer, false, sys,
                          {{"instruction", instruction},
                           {"class_names", join(class_names, ", ")},
                           {"examples", block}});
  };

  std::vector<std::string> texts;
  std::size_t text_chars = 0;
  for (const auto& ex : examples.examples) {
    texts.push_back(ex.text);
    text_chars += ex.text.size();
  }
  auto messages = render(texts);
  const std::size_t total = message_chars(messages);
  if (total > settings.context_char_budget) {
    const std::size_t fixed = total - text_chars;
    const std::size_t room =
        settings.context_char_budget > fixed ? settings.context_char_budget - fixed : 0;
    messages = render(fit_texts_to_budget(std::move(texts), room));
  }

  auto reply = gateway.complete_structured(std::move(messages), settings.proposer, shape,
                                           settings.parse_retries,
                                           {ModuleRole::kFeatureProposer, candidate, 0});
  return validate_feature_set(reply.value);
}

// --- Extractor ----------------------------------------------------------------

std::vector<FeatureValue> extract(lm::LmGateway& gateway, const std::string& text,
                                  const FeatureSet& fs, const AgentSettings& settings,
                                  const std::string& candidate, std::int64_t item) {
  require_valid(fs);
  const std::map<std::string, std::string> sys{{"schema_text", render_schema_text(fs)}};
  auto messages = build_messages(ModuleRole::kExtractor, false, sys, {{"text", text}});
  const std::size_t total = message_chars(messages);
  if (total > settings.context_char_budget) {
    const std::size_t fixed = total - text.size();
    const std::size_t room =
        settings.context_char_budget > fixed ? settings.context_char_budget - fixed : 0;
    messages = build_messages(ModuleRole::kExtractor, false, sys,
                              {{"text", fit_texts_to_budget({text}, room).front()}});
  }

  const lm::CallTag tag{ModuleRole::kExtractor, candidate, item};
  json answer;
  try {
    answer = gateway
                 .complete_structured(std::move(messages), settings.extractor,
                                      Shape::object(), settings.parse_retries, tag)
                 .value;
  } catch (const lm::SchemaViolation&) {
    return std::vector<FeatureValue>(fs.size(), Missing{MissingReason::kParseFailed});
  } catch (const lm::TransportError& e) {
    spdlog::warn("extraction of item {} for {} refused: {}", item, candidate, e.what());
    return std::vector<FeatureValue>(fs.size(), Missing{MissingReason::kExtractionRefused});
  } catch (const lm::EndpointRejected& e) {
    spdlog::warn("extraction of item {} for {} refused: {}", item, candidate, e.what());
    return std::vector<FeatureValue>(fs.size(), Missing{MissingReason::kExtractionRefused});
  }

  std::vector<FeatureValue> values;
  values.reserve(fs.size());
  for (const auto& f : fs.features) {
    auto it = answer.find(f.name);
    if (it == answer.end()) {
      values.emplace_back(Missing{MissingReason::kParseFailed});
    } else {
      values.push_back(coerce_value(*it, f.value_type));
    }
  }
  return values;
}

FeatureMatrix extract_all(lm::LmGateway& gateway,
                          const std::vector<LabeledExample>& annotation,
                          const FeatureSet& fs,
                          const std::vector<std::string>& class_names,
                          const AgentSettings& settings, const std::string& candidate) {
  if (annotation.empty()) throw PreconditionFailed("annotation split is empty");
  require_valid(fs);

  std::vector<FeatureRow> rows(annotation.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= annotation.size()) return;
      try {
        const auto& ex = annotation[i];
        rows[i] = FeatureRow{ex.id, ex.label,
                             extract(gateway, ex.text, fs, settings, candidate,
                                     static_cast<std::int64_t>(i))};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(annotation.size());
        return;
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(
      annotation.size(), static_cast<std::size_t>(std::max(1, gateway.max_in_flight())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return FeatureMatrix(fs, class_names, std::move(rows));
}

// --- Interpretability scorer --------------------------------------------------

double interpretability_set_score(const std::vector<FeatureInterpretability>& features) {
  if (features.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& f : features) sum += f.leakage_flag ? 0.0 : f.criteria_mean();
  return sum / static_cast<double>(features.size());
}

InterpretabilityReport score_interpretability(
    lm::LmGateway& gateway, const FeatureSet& fs,
    const std::vector<std::string>& class_names,
    const std::vector<std::string>& leakage_hints, const AgentSettings& settings,
    const std::string& candidate) {
  require_valid(fs);
  const Shape shape = scorer_shape(fs);
  auto messages = build_messages(
      ModuleRole::kInterpretabilityScorer, false, {{"schema", shape.json_schema().dump(2)}},
      {{"class_names", join(class_names, ", ")}, {"schema_text", render_schema_text(fs)}});
  auto reply = gateway.complete_structured(
      std::move(messages), settings.scorer, shape, settings.parse_retries,
      {ModuleRole::kInterpretabilityScorer, candidate, 0});

  const std::set<std::string> hinted(leakage_hints.begin(), leakage_hints.end());
  const json& scores = reply.value.at("scores");
  InterpretabilityReport report;
  for (const auto& f : fs.features) {
    const json& s = scores.at(f.name);
    FeatureInterpretability fi;
    fi.name = f.name;
    fi.readable = s.at("readable").get<double>() / 10.0;
    fi.human_worded = s.at("human_worded").get<double>() / 10.0;
    fi.understandable = s.at("understandable").get<double>() / 10.0;
    fi.meaningful = s.at("meaningful").get<double>() / 10.0;
    fi.trackable = s.at("trackable").get<double>() / 10.0;
    fi.leakage_flag = s.at("leakage").get<bool>() || hinted.count(f.name) > 0;
    if (auto it = s.find("rationale"); it != s.end() && it->is_string())
      fi.rationale = it->get<std::string>();
    report.per_feature.push_back(std::move(fi));
  }
  report.set_score = interpretability_set_score(report.per_feature);
  report.feedback_text = trim(reply.value.at("feedback").get<std::string>());
  if (report.feedback_text.empty()) report.feedback_text = "(no feedback)";
  return report;
}

// --- Performance feedback -----------------------------------------------------

std::string render_metrics_table(const metrics::MetricsBundle& m) {
  std::string out;
  out += fmt::format("Cross-validated macro F1: {}\n", format_number(m.macro_f1));
  out += fmt::format("Mean coverage: {}\n", format_number(m.coverage_mean, 3));
  if (!m.confusion.empty() && m.confusion.size() == m.class_names.size()) {
    out += "Confusion matrix (rows: true label, columns: predicted):\n";
    out += "| true \\ predicted | " + join(m.class_names, " | ") + " |\n";
    for (std::size_t i = 0; i < m.confusion.size(); ++i) {
      out += "| " + m.class_names[i] + " |";
      for (auto c : m.confusion[i]) out += fmt::format(" {} |", c);
      out += "\n";
    }
  }
  out += "\n| feature | SHAP importance | mutual information (nats) | coverage | leakage |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& f : m.per_feature) {
    out += fmt::format("| {} | {} | {} | {} | {} |\n", f.name,
                       format_number(f.shap_importance), format_number(f.mutual_information),
                       format_number(f.coverage, 3),
                       f.leakage_flag ? "yes (" + join(f.leakage_reasons, "; ") + ")" : "no");
  }
  out.pop_back();
  return out;
}

namespace {

// Appends a line naming every zero-coverage feature the text does not mention.
std::string with_zero_coverage_note(std::string text, const metrics::MetricsBundle& m) {
  std::vector<std::string> unmentioned;
  for (const auto& name : zero_coverage_features(m))
    if (text.find(name) == std::string::npos) unmentioned.push_back(name);
  if (!unmentioned.empty())
    text += "\nNever extracted (zero coverage): " + join(unmentioned, ", ") + ".";
  return text;
}

}  // namespace

std::string fallback_performance_feedback(const metrics::MetricsBundle& m) {
  std::vector<const metrics::FeatureMetrics*> ranked;
  for (const auto& f : m.per_feature) ranked.push_back(&f);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    return a->shap_importance > b->shap_importance;
  });

  std::string out =
      fmt::format("The feature set reaches a cross-validated macro F1 of {}.",
                  format_number(m.macro_f1));
  std::vector<std::string> strong;
  for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
    if (ranked[i]->shap_importance <= 0.0) break;
    strong.push_back(fmt::format("{} (SHAP {})", ranked[i]->name,
                                 format_number(ranked[i]->shap_importance)));
  }
  if (!strong.empty()) out += " Most predictive: " + join(strong, ", ") + ".";

  double max_shap = ranked.empty() ? 0.0 : ranked.front()->shap_importance;
  std::vector<std::string> weak, sparse, leaked;
  for (const auto& f : m.per_feature) {
    if (f.leakage_flag) leaked.push_back(f.name);
    if (f.coverage > 0.0 && f.coverage < 0.5) sparse.push_back(f.name);
    if (f.coverage > 0.0 && f.shap_importance <= 0.05 * max_shap) weak.push_back(f.name);
  }
  if (!weak.empty())
    out += " Little or no signal: " + join(weak, ", ") +
           "; replace them with properties that differ between the labels.";
  if (!sparse.empty())
    out += " Rarely extracted (coverage below 50%): " + join(sparse, ", ") +
           "; make their extraction prompts answerable for every text.";
  if (!leaked.empty())
    out += " Leaking the label: " + join(leaked, ", ") + "; remove them.";
  return with_zero_coverage_note(std::move(out), m);
}

std::string performance_feedback(lm::LmGateway& gateway, const metrics::MetricsBundle& m,
                                 const AgentSettings& settings,
                                 const std::string& candidate) {
  if (m.per_feature.empty())
    throw PreconditionFailed("performance feedback needs per-feature metrics");

  std::string text;
  try {
    const Shape shape = feedback_shape();
    auto messages = build_messages(ModuleRole::kPerformanceFeedback, false,
                                   {{"schema", shape.json_schema().dump(2)}},
                                   {{"metrics_table", render_metrics_table(m)}});
    auto reply = gateway.complete_structured(
        std::move(messages), settings.feedback, shape, settings.parse_retries,
        {ModuleRole::kPerformanceFeedback, candidate, 0});
    text = trim(reply.value.at("feedback").get<std::string>());
  } catch (const lm::ScriptMiss&) {
    throw;
  } catch (const std::exception& e) {
    spdlog::warn("performance feedback for {} fell back to the template: {}", candidate,
                 e.what());
    text.clear();
  }
  if (text.empty()) return fallback_performance_feedback(m);
  return with_zero_coverage_note(std::move(text), m);
}

// --- Reflective proposer ------------------------------------------------------

std::string DataSummary::render() const {
  std::string out = "Class distribution (train):";
  for (const auto& [name, count] : class_counts) out += fmt::format(" {}={}", name, count);
  out += fmt::format("\nMean text length: {:.1f} characters", mean_text_length);
  if (!vocabulary_hints.empty())
    out += "\nFrequent terms: " + join(vocabulary_hints, ", ");
  out += "\nSample texts:";
  for (const auto& [label, texts] : snippets)
    for (const auto& t : texts) out += fmt::format("\n[{}] {}", label, t);
  return out;
}

DataSummary build_data_summary(const std::vector<LabeledExample>& train,
                               std::uint64_t seed) {
  if (train.empty()) throw PreconditionFailed("train split is empty");
  static const std::set<std::string> kStop{
      "that", "this", "with", "have", "from", "they", "were", "been", "their", "there",
      "what", "when", "which", "would", "about", "just", "your", "will", "than", "then",
      "them", "into", "also", "some", "very", "more", "does", "only", "here", "http",
      "https"};

  std::map<std::string, std::vector<std::size_t>> by_class;
  std::map<std::string, std::size_t> term_counts;
  double total_chars = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_class[train[i].label].push_back(i);
    total_chars += static_cast<double>(count_code_points(train[i].text));
    std::string token;
    auto flush = [&] {
      if (token.size() >= 4 && !kStop.count(token)) ++term_counts[token];
      token.clear();
    };
    for (unsigned char c : train[i].text) {
      if (std::isalnum(c)) {
        token += static_cast<char>(std::tolower(c));
      } else {
        flush();
      }
    }
    flush();
  }

  DataSummary s;
  s.mean_text_length = total_chars / static_cast<double>(train.size());
  for (auto& [label, members] : by_class) {
    s.class_counts.emplace_back(label, members.size());
    Rng rng(derive_seed(seed, label));
    shuffle(members, rng);
    std::vector<std::string> picks;
    for (std::size_t j = 0; j < members.size() && j < 2; ++j) {
      std::string t = train[members[j]].text;
      std::replace(t.begin(), t.end(), '\n', ' ');
      picks.push_back(cut(t, 240));
    }
    s.snippets.emplace_back(label, std::move(picks));
  }

  std::vector<std::pair<std::string, std::size_t>> terms(term_counts.begin(),
                                                         term_counts.end());
  std::stable_sort(terms.begin(), terms.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < terms.size() && i < 12; ++i) {
    if (terms[i].second < 2) break;
    s.vocabulary_hints.push_back(terms[i].first);
  }
  return s;
}

std::string_view to_string(ProposerMode mode) {
  return mode == ProposerMode::kReflective ? "reflective" : "scalar";
}

std::optional<ProposerMode> proposer_mode_from_string(std::string_view text) {
  if (text == "reflective") return ProposerMode::kReflective;
  if (text == "scalar" || text == "scalar_only" || text == "scalar-only")
    return ProposerMode::kScalarOnly;
  return std::nullopt;
}

std::vector<std::string> reflect_instructions(lm::LmGateway& gateway,
                                              const ReflectionRequest& request,
                                              const AgentSettings& settings,
                                              const std::string& candidate) {
  if (request.k < 1) throw PreconditionFailed("k must be at least 1");
  const bool scalar = request.mode == ProposerMode::kScalarOnly;
  const Shape shape = reflection_shape(request.k);
  const std::map<std::string, std::string> sys{{"k", std::to_string(request.k)},
                                               {"schema", shape.json_schema().dump(2)}};
  std::map<std::string, std::string> user{{"summary", request.summary.render()},
                                          {"instruction", request.current_instruction}};
  if (scalar) {
    user["score"] = format_number(request.combined_score);
  } else {
    user["interp_feedback"] = request.interp_feedback;
    user["perf_feedback"] = request.perf_feedback;
  }
  auto messages = build_messages(ModuleRole::kReflectiveProposer, scalar, sys, user);

  std::vector<std::string> out;
  std::set<std::string> seen{trim(request.current_instruction)};
  auto absorb = [&](const json& reply) {
    for (const auto& item : reply.at("instructions")) {
      std::string t = trim(item.get<std::string>());
      if (t.empty() || !seen.insert(t).second) continue;
      if (out.size() < request.k) out.push_back(std::move(t));
    }
  };

  try {
    auto reply = gateway.complete_structured(
        messages, settings.reflective, shape, settings.parse_retries,
        {ModuleRole::kReflectiveProposer, candidate, 0});
    absorb(reply.value);
    if (out.size() < request.k) {
      messages.push_back({"assistant", reply.value.dump()});
      messages.push_back(
          {"user", fmt::format("Only {} of those instructions were new and distinct. "
                               "Propose {} distinct instructions that differ from each "
                               "other and from the current instruction.",
                               out.size(), request.k)});
      auto again = gateway.complete_structured(
          std::move(messages), settings.reflective, shape, settings.parse_retries,
          {ModuleRole::kReflectiveProposer, candidate, 1});
      absorb(again.value);
    }
  } catch (const lm::SchemaViolation& e) {
    if (out.empty()) {
      spdlog::warn("reflective proposer for {} failed, keeping the current instruction: {}",
                   candidate, e.what());
      return {request.current_instruction};
    }
  }

  const std::string base = out.empty() ? trim(request.current_instruction) : out.front();
  for (int n = 2; out.size() < request.k; ++n) {
    std::string t = fmt::format("{} (variant {})", base, n);
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace featopt::agents
