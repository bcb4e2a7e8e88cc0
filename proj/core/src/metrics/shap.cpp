// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/metrics/shap.hpp"

#include "featopt/errors.hpp"

namespace featopt::metrics {

using Eigen::MatrixXd;

namespace {

void check_shapes(const ClassifierModel& model, const EncodedMatrix& enc) {
  if (model.weights.cols() != enc.x.cols() ||
      enc.stats.column_means.size() != enc.x.cols()) {
    throw ShapeMismatch("model has " + std::to_string(model.weights.cols()) +
                        " columns, encoding has " + std::to_string(enc.x.cols()));
  }
  if (model.weights.rows() != model.bias.size()) {
    throw ShapeMismatch("model weight and bias class counts differ");
  }
}

MatrixXd centered(const EncodedMatrix& enc) {
  return enc.x.rowwise() - enc.stats.column_means.transpose();
}

}  // namespace

std::vector<MatrixXd> linear_shap_attributions(const ClassifierModel& model,
                                               const EncodedMatrix& enc) {
  check_shapes(model, enc);
  const MatrixXd d = centered(enc);
  std::vector<MatrixXd> out;
  out.reserve(enc.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    out.push_back(model.weights.array().rowwise() * d.row(i).array());
  }
  return out;
}

std::vector<double> linear_shap_importance_sum(const ClassifierModel& model,
                                               const EncodedMatrix& enc) {
  check_shapes(model, enc);
  const MatrixXd d = centered(enc);
  const auto classes = static_cast<double>(model.weights.rows());
  std::vector<double> sums(enc.feature_names.size(), 0.0);
  for (std::size_t f = 0; f < sums.size(); ++f) {
    auto cols = enc.group(f);
    MatrixXd group_phi = MatrixXd::Zero(d.rows(), model.weights.rows());
    for (auto j : cols) {
      const auto jj = static_cast<Eigen::Index>(j);
      group_phi += d.col(jj) * model.weights.col(jj).transpose();
    }
    sums[f] = group_phi.cwiseAbs().sum() / classes;
  }
  return sums;
}

std::vector<double> linear_shap_importance(const ClassifierModel& model,
                                           const EncodedMatrix& enc) {
  auto sums = linear_shap_importance_sum(model, enc);
  if (enc.rows() == 0) return sums;
  for (auto& s : sums) s /= static_cast<double>(enc.rows());
  return sums;
}

}  // namespace featopt::metrics
