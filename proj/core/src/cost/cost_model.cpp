// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/cost/cost_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "featopt/errors.hpp"

namespace featopt::cost {
namespace {

CostTerm argmax(double propose, double extract, double score) {
  // Extraction wins ties: it is the term the analysis expects to dominate.
  if (extract >= propose && extract >= score) return CostTerm::kExtract;
  if (propose >= score) return CostTerm::kPropose;
  return CostTerm::kScore;
}

}  // namespace

void CostParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"m_fp", m_fp}, {"m_e", m_e},   {"m_s", m_s}, {"L_phi", L_phi},  {"L_t", L_t},
      {"L_f", L_f},   {"N_A", N_A}, {"N_d", N_d}, {"N_iter", N_iter}};
  for (const auto& [name, v] : fields)
    if (!(std::isfinite(v) && v > 0.0))
      throw PreconditionFailed(fmt::format("cost parameter {} must be positive", name));
}

std::string_view to_string(CostTerm term) {
  switch (term) {
    case CostTerm::kPropose: return "propose";
    case CostTerm::kExtract: return "extract";
    case CostTerm::kScore: return "score";
  }
  return "?";
}

CostBreakdown estimate_cost(const CostParams& p) {
  p.validate();
  CostBreakdown b;
  b.propose_term = p.m_fp * p.L_phi;
  b.extract_term = p.N_A * p.m_e * (p.L_t + p.L_f);
  b.score_term = p.m_s * p.L_f;
  b.eval_total = b.propose_term + b.extract_term + b.score_term;
  b.run_total = (p.N_d + p.N_iter) * b.eval_total;
  b.dominant = argmax(b.propose_term, b.extract_term, b.score_term);
  return b;
}

nlohmann::json CostBreakdown::to_json() const {
  return {{"propose_term", propose_term}, {"extract_term", extract_term},
          {"score_term", score_term},     {"eval_total", eval_total},
          {"run_total", run_total},       {"dominant", std::string(to_string(dominant))}};
}

CostReconciliation reconcile(const lm::UsageLedger& ledger, const CostBreakdown& breakdown) {
  CostReconciliation r;
  r.predicted_dominant = breakdown.dominant;
  r.total_tokens = ledger.total().total();
  if (ledger.empty() || r.total_tokens == 0) {
    r.measured_dominant = r.predicted_dominant;
    r.summary = "no data";
    return r;
  }
  r.has_data = true;
  const double total = static_cast<double>(r.total_tokens);
  const auto tokens = [&](lm::ModuleRole role) {
    return static_cast<double>(ledger.for_role(role).total());
  };
  r.extractor_tokens = ledger.for_role(lm::ModuleRole::kExtractor).total();
  r.extractor_share = tokens(lm::ModuleRole::kExtractor) / total;
  r.proposer_share = tokens(lm::ModuleRole::kFeatureProposer) / total;
  r.scorer_share = tokens(lm::ModuleRole::kInterpretabilityScorer) / total;
  r.other_share = 1.0 - r.extractor_share - r.proposer_share - r.scorer_share;
  r.measured_dominant = argmax(r.proposer_share, r.extractor_share, r.scorer_share);
  r.disagreement = r.measured_dominant != r.predicted_dominant;
  r.summary = fmt::format(
      "extractor {:.1f}% of {} tokens (proposer {:.1f}%, scorer {:.1f}%, other {:.1f}%); "
      "predicted dominant term: {}, measured: {}{}",
      100.0 * r.extractor_share, r.total_tokens, 100.0 * r.proposer_share,
      100.0 * r.scorer_share, 100.0 * r.other_share, to_string(r.predicted_dominant),
      to_string(r.measured_dominant), r.disagreement ? " (DISAGREE)" : "");
  return r;
}

nlohmann::json CostReconciliation::to_json() const {
  return {{"has_data", has_data},
          {"total_tokens", total_tokens},
          {"extractor_tokens", extractor_tokens},
          {"extractor_share", extractor_share},
          {"proposer_share", proposer_share},
          {"scorer_share", scorer_share},
          {"other_share", other_share},
          {"predicted_dominant", std::string(to_string(predicted_dominant))},
          {"measured_dominant", std::string(to_string(measured_dominant))},
          {"disagreement", disagreement},
          {"summary", summary}};
}

}  // namespace featopt::cost
