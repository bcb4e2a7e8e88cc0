// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "featopt/cost/cost_model.hpp"
#include "featopt/io/config.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/optimizer/search.hpp"

namespace featopt::io {

// Cost-model inputs for a run: model weights from the config, token lengths
// as whitespace-token proxies measured on the data and proposed schemas.
cost::CostParams measured_cost_params(const RunConfig& config, const DatasetSplits& splits,
                                      const optimizer::SearchSpace& space,
                                      const std::vector<optimizer::TrialRecord>& trials);

struct ReportInputs {
  const RunConfig* config = nullptr;
  const optimizer::SearchSpace* space = nullptr;
  const std::vector<optimizer::TrialRecord>* trials = nullptr;
  std::optional<std::size_t> best;
  const lm::UsageLedger* usage = nullptr;
  cost::CostBreakdown estimate;
  cost::CostReconciliation reconciliation;
};

std::string render_report(const ReportInputs& in);

// One run as seen by `compare`.
struct RunView {
  std::string label;  // directory name
  std::string mode;   // proposer mode from the manifest
  std::vector<optimizer::TrialRecord> trials;
};

// Best-so-far combined score and F1 at trial checkpoints, side by side, plus
// what an F1-only selection would have picked in each run.
std::string render_comparison(const std::vector<RunView>& runs);

}  // namespace featopt::io
