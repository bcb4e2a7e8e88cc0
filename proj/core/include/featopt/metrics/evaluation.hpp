// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/metrics/encoding.hpp"
#include "featopt/metrics/information.hpp"
#include "featopt/metrics/logreg.hpp"

namespace featopt::metrics {

struct EvaluationConfig {
  std::size_t k_folds = 5;
  double l2 = 1.0;
  double tol = 1e-6;
  int max_iter = 1000;
  std::uint64_t seed = 0;
  LeakageOptions leakage;
};

using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;  // [true][pred]

// Mean over classes of per-class F1; a class with no support and no
// predictions contributes 0.
double macro_f1(const ConfusionMatrix& confusion);

// Stratified fold index per row. Within each class, rows are ranked by a
// seed-keyed hash of their example id, so the assignment follows the ids and
// not the row positions.
std::vector<std::size_t> assign_folds(const FeatureMatrix& matrix, std::size_t k_folds,
                                      std::uint64_t seed);

struct FoldDetail {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  std::size_t validation_rows = 0;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
};

struct CrossValidationResult {
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::vector<ClassifierModel> fold_models;
  std::vector<FoldDetail> folds;
  std::vector<int> predictions;  // per input row, pooled across folds
  // Per feature, mean over all validation rows of the fold models' SHAP.
  std::vector<double> shap_importance;
};

// Throws TooFewPerClass when some class has fewer than k_folds rows and
// DegenerateLabels when fewer than two classes are present.
CrossValidationResult cross_validated_f1(const FeatureMatrix& matrix,
                                         const EvaluationConfig& config);

struct FeatureMetrics {
  std::string name;
  double shap_importance = 0.0;
  double mutual_information = 0.0;  // nats
  double coverage = 0.0;
  bool leakage_flag = false;
  std::vector<std::string> leakage_reasons;
};

struct MetricsBundle {
  bool ok = false;
  std::string note;  // set when the bundle is a zero-score failure
  double macro_f1 = 0.0;
  std::vector<std::string> class_names;
  std::vector<FeatureMetrics> per_feature;
  ConfusionMatrix confusion;
  std::vector<FoldDetail> folds;
  double coverage_mean = 0.0;

  std::vector<std::string> leaked_features() const;
  nlohmann::json to_json() const;
  static MetricsBundle from_json(const nlohmann::json& doc);
};

// Runs cross-validation, SHAP, MI, coverage and the leakage guard. Degenerate
// inputs (all values Missing, one class, too few rows per class) produce a
// zero-score bundle with `ok == false` and an explanatory note.
MetricsBundle compute_metrics(const FeatureMatrix& matrix,
                              const EvaluationConfig& config);

}  // namespace featopt::metrics
