// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/io/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "featopt/agents/agents.hpp"
#include "featopt/schema.hpp"

namespace featopt::io {
namespace {

using optimizer::TrialRecord;

std::string one_line(std::string s, std::size_t limit = 120) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '|', '/');
  if (s.size() > limit) {
    std::size_t cut = limit - 3;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s = s.substr(0, cut) + "...";
  }
  return s;
}

std::optional<std::size_t> best_by_f1(const std::vector<TrialRecord>& trials) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].ok()) continue;
    if (!best || trials[i].f1_score > trials[*best].f1_score) best = i;
  }
  return best;
}

std::size_t leaked_count(const TrialRecord& t) {
  std::size_t n = 0;
  for (const auto& f : t.interpretability) n += f.leakage_flag ? 1 : 0;
  return n;
}

std::string fmt4(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

cost::CostParams measured_cost_params(const RunConfig& config, const DatasetSplits& splits,
                                      const optimizer::SearchSpace& space,
                                      const std::vector<TrialRecord>& trials) {
  cost::CostParams p;
  p.m_fp = config.cost_weights.m_fp;
  p.m_e = config.cost_weights.m_e;
  p.m_s = config.cost_weights.m_s;

  double text_tokens = 0.0;
  for (const auto& ex : splits.annotation)
    text_tokens += static_cast<double>(lm::count_whitespace_tokens(ex.text));
  p.L_t = std::max(1.0, text_tokens / std::max<double>(1.0, splits.annotation.size()));

  double schema_tokens = 0.0;
  std::size_t schemas = 0;
  for (const auto& t : trials) {
    if (!t.features) continue;
    schema_tokens +=
        static_cast<double>(lm::count_whitespace_tokens(serialize_feature_schema(*t.features)));
    ++schemas;
  }
  p.L_f = schemas ? std::max(1.0, schema_tokens / static_cast<double>(schemas)) : 1.0;

  double prompt_tokens = 0.0;
  for (const auto& set : space.example_sets) {
    prompt_tokens += static_cast<double>(
        lm::count_whitespace_tokens(space.instructions.empty() ? "" : space.instructions[0].text));
    for (const auto& ex : set.examples)
      prompt_tokens += static_cast<double>(lm::count_whitespace_tokens(ex.text));
  }
  p.L_phi = std::max(1.0, prompt_tokens / std::max<double>(1.0, space.example_sets.size()));

  p.N_A = static_cast<double>(std::max<std::size_t>(1, splits.annotation.size()));
  p.N_d = static_cast<double>(config.optimizer.n_example_sets);
  // Trials actually run; a small instruction pool can stop the search early.
  p.N_iter = static_cast<double>(
      trials.empty() ? config.optimizer.effective_n_iter() : trials.size());
  return p;
}

std::string render_report(const ReportInputs& in) {
  const auto& trials = *in.trials;
  const auto& space = *in.space;
  std::string out = "# Feature optimization report\n\n";

  std::size_t ok = 0;
  std::map<std::string, std::size_t> aborted;
  for (const auto& t : trials) {
    if (t.ok()) {
      ++ok;
    } else {
      ++aborted[t.abort_reason];
    }
  }
  out += fmt::format("- Trials: {} ({} ok", trials.size(), ok);
  for (const auto& [reason, n] : aborted) out += fmt::format(", {} {}", n, reason);
  out += ")\n";
  out += fmt::format("- Instruction pool: {}; example sets: {} of {} texts\n",
                     space.instructions.size(), space.example_sets.size(),
                     in.config->optimizer.example_set_size);
  out += fmt::format("- Proposer mode: {}; lambda = {}; seed = {}\n",
                     agents::to_string(in.config->optimizer.mode), in.config->optimizer.lambda,
                     in.config->optimizer.seed);

  if (!in.best) {
    out += "\nNo trial completed successfully.\n";
  } else {
    const auto& b = trials[*in.best];
    out += fmt::format("\n## Best candidate ({})\n\n", b.candidate_id());
    out += fmt::format("- Combined score: {}\n- Macro F1 (cross-validated): {}\n"
                       "- Interpretability: {}\n- Example set: {}\n\n",
                       fmt4(b.objective()), fmt4(b.f1_score), fmt4(b.interpretability_score),
                       b.candidate.example_set_id);
    out += "Instruction:\n\n> " + one_line(space.instructions[b.candidate.instruction_id].text, 2000) +
           "\n\n";
    out += "| feature | type | SHAP importance | MI (nats) | coverage | interpretability | leakage |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (std::size_t f = 0; f < b.features->size(); ++f) {
      const auto& def = b.features->features[f];
      const auto* m = b.metrics && f < b.metrics->per_feature.size() ? &b.metrics->per_feature[f]
                                                                      : nullptr;
      const auto* interp = f < b.interpretability.size() ? &b.interpretability[f] : nullptr;
      out += fmt::format("| {} | {} | {} | {} | {} | {} | {} |\n", def.name,
                         to_string(def.value_type.kind), m ? fmt4(m->shap_importance) : "-",
                         m ? fmt4(m->mutual_information) : "-",
                         m ? fmt::format("{:.3f}", m->coverage) : "-",
                         interp ? fmt::format("{:.2f}", interp->criteria_mean()) : "-",
                         (m && m->leakage_flag) || (interp && interp->leakage_flag) ? "yes" : "no");
    }
    if (b.metrics && !b.metrics->confusion.empty()) {
      const auto& names = b.metrics->class_names;
      out += "\nConfusion matrix (rows: true, columns: predicted):\n\n| |";
      for (const auto& n : names) out += " " + n + " |";
      out += "\n|---|";
      for (std::size_t i = 0; i < names.size(); ++i) out += "---|";
      out += "\n";
      for (std::size_t i = 0; i < names.size(); ++i) {
        out += "| " + names[i] + " |";
        for (auto c : b.metrics->confusion[i]) out += fmt::format(" {} |", c);
        out += "\n";
      }
    }
    out += "\nInterpretability feedback:\n\n> " + one_line(b.interp_feedback, 4000) + "\n";
    out += "\nPerformance feedback:\n\n> " + one_line(b.perf_feedback, 4000) + "\n";
  }

  out += "\n## Trials\n\n| trial | phase | instruction | set | status | F1 | interp. | combined |\n";
  out += "|---|---|---|---|---|---|---|---|\n";
  for (const auto& t : trials) {
    out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} |\n", t.index, t.phase,
                       t.candidate.instruction_id, t.candidate.example_set_id,
                       t.ok() ? "ok" : "aborted: " + t.abort_reason, fmt4(t.f1_score),
                       fmt4(t.interpretability_score),
                       t.ok() ? fmt4(*t.combined_score) : "-");
  }

  out += "\n## Instructions\n\n";
  for (std::size_t i = 0; i < space.instructions.size(); ++i) {
    const auto& e = space.instructions[i];
    out += fmt::format("{}. [{}{}] {}\n", i, e.origin,
                       e.round ? fmt::format(" round {}", e.round) : "", one_line(e.text, 400));
  }

  out += "\n## Cost\n\n";
  const auto& e = in.estimate;
  out += "| term | estimate |\n|---|---|\n";
  out += fmt::format("| propose | {:.6g} |\n| extract | {:.6g} |\n| score | {:.6g} |\n",
                     e.propose_term, e.extract_term, e.score_term);
  out += fmt::format("| one evaluation | {:.6g} |\n| whole run | {:.6g} |\n\n", e.eval_total,
                     e.run_total);
  out += fmt::format("Predicted dominant term: {}.\n\n", cost::to_string(e.dominant));
  out += "Measured tokens: " + in.reconciliation.summary + "\n";
  if (in.usage && !in.usage->empty()) {
    out += "\n| agent | prompt tokens | completion tokens |\n|---|---|---|\n";
    for (auto role : lm::kAllModuleRoles) {
      auto u = in.usage->for_role(role);
      out += fmt::format("| {} | {} | {} |\n", lm::to_string(role), u.prompt_tokens,
                         u.completion_tokens);
    }
  }
  return out;
}

std::string render_comparison(const std::vector<RunView>& runs) {
  std::string out = "# Run comparison\n\n| run | mode | trials | best combined | F1 | interp. | "
                    "leaking features | F1-only pick: F1 | F1-only pick: interp. | "
                    "F1-only pick: leaking features |\n|---|---|---|---|---|---|---|---|---|---|\n";
  std::size_t longest = 0;
  for (const auto& r : runs) {
    longest = std::max(longest, r.trials.size());
    auto best = optimizer::best_trial(r.trials);
    auto by_f1 = best_by_f1(r.trials);
    auto cell = [&](std::optional<std::size_t> i, auto fn) {
      return i ? fn(r.trials[*i]) : std::string("-");
    };
    out += fmt::format(
        "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", r.label, r.mode,
        r.trials.size(), cell(best, [](const TrialRecord& t) { return fmt4(t.objective()); }),
        cell(best, [](const TrialRecord& t) { return fmt4(t.f1_score); }),
        cell(best, [](const TrialRecord& t) { return fmt4(t.interpretability_score); }),
        cell(best, [](const TrialRecord& t) { return std::to_string(leaked_count(t)); }),
        cell(by_f1, [](const TrialRecord& t) { return fmt4(t.f1_score); }),
        cell(by_f1, [](const TrialRecord& t) { return fmt4(t.interpretability_score); }),
        cell(by_f1, [](const TrialRecord& t) { return std::to_string(leaked_count(t)); }));
  }

  std::vector<std::size_t> checkpoints;
  for (std::size_t n = 1; n < longest; n *= 2) checkpoints.push_back(n);
  if (longest > 0) checkpoints.push_back(longest);

  out += "\nBest combined score (F1) after n trials:\n\n| n |";
  for (const auto& r : runs) out += " " + r.label + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < runs.size(); ++i) out += "---|";
  out += "\n";
  for (auto n : checkpoints) {
    out += fmt::format("| {} |", n);
    for (const auto& r : runs) {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < std::min(n, r.trials.size()); ++i) {
        const auto& t = r.trials[i];
        if (t.ok() && (!best || t.objective() > r.trials[*best].objective())) best = i;
      }
      out += best ? fmt::format(" {} ({}) |", fmt4(r.trials[*best].objective()),
                                fmt4(r.trials[*best].f1_score))
                  : std::string(" - |");
    }
    out += "\n";
  }
  return out;
}

}  // namespace featopt::io
