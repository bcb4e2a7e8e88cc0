// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "featopt/lm/gateway.hpp"

namespace featopt::cost {

// Model-size weights are relative units; token lengths are per call.
struct CostParams {
  double m_fp = 1.0;   // feature proposer model size
  double m_e = 1.0;    // extractor model size
  double m_s = 1.0;    // interpretability scorer model size
  double L_phi = 1.0;  // proposer prompt length
  double L_t = 1.0;    // mean text length
  double L_f = 1.0;    // serialized schema length
  double N_A = 1.0;    // annotation size
  double N_d = 1.0;
  double N_iter = 1.0;

  // Throws PreconditionFailed unless every field is finite and > 0.
  void validate() const;
};

enum class CostTerm { kPropose, kExtract, kScore };

std::string_view to_string(CostTerm term);

struct CostBreakdown {
  double propose_term = 0.0;  // m_fp * L_phi
  double extract_term = 0.0;  // N_A * m_e * (L_t + L_f)
  double score_term = 0.0;    // m_s * L_f
  double eval_total = 0.0;
  double run_total = 0.0;     // (N_d + N_iter) * eval_total
  CostTerm dominant = CostTerm::kExtract;

  nlohmann::json to_json() const;
};

CostBreakdown estimate_cost(const CostParams& params);

// Measured token shares compared with a prediction.
struct CostReconciliation {
  bool has_data = false;
  std::int64_t total_tokens = 0;
  std::int64_t extractor_tokens = 0;
  double extractor_share = 0.0;
  double proposer_share = 0.0;
  double scorer_share = 0.0;
  double other_share = 0.0;  // feedback and reflective calls
  CostTerm predicted_dominant = CostTerm::kExtract;
  CostTerm measured_dominant = CostTerm::kExtract;
  bool disagreement = false;
  std::string summary;  // "no data" for an empty ledger

  nlohmann::json to_json() const;
};

CostReconciliation reconcile(const lm::UsageLedger& ledger, const CostBreakdown& breakdown);

}  // namespace featopt::cost
