// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "featopt/metrics/encoding.hpp"
#include "featopt/metrics/logreg.hpp"

namespace featopt::metrics {

// Exact interventional Shapley values of the per-class logits of a linear
// model: phi[i](c, j) = W(c, j) * (x(i, j) - mean_j), with the fitted-fold
// column means as baseline. Throws ShapeMismatch on incompatible inputs.
std::vector<Eigen::MatrixXd> linear_shap_attributions(const ClassifierModel& model,
                                                      const EncodedMatrix& enc);

// Per source feature: attributions summed within the feature's column group,
// then the mean absolute value over samples and classes.
std::vector<double> linear_shap_importance(const ClassifierModel& model,
                                           const EncodedMatrix& enc);

// Sum over rows of the per-feature |group attribution| averaged over classes;
// callers pooling several folds divide by the total row count themselves.
std::vector<double> linear_shap_importance_sum(const ClassifierModel& model,
                                               const EncodedMatrix& enc);

}  // namespace featopt::metrics
