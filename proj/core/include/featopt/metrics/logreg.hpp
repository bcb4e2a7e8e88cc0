// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featopt/metrics/encoding.hpp"

namespace featopt::metrics {

struct ClassifierModel {
  std::vector<std::string> class_names;
  Eigen::MatrixXd weights;  // classes x columns
  Eigen::VectorXd bias;     // classes
  double l2 = 1.0;
  double final_gradient_norm = 0.0;  // infinity norm
  int iterations = 0;
  bool converged = false;
  // Objective value after each accepted step, starting from the initial point.
  std::vector<double> loss_history;

  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

// Multinomial cross-entropy summed over rows plus (l2/2)*||W||^2, bias
// unregularized. Fills the gradients when the pointers are non-null.
double logreg_objective(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                        const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                        double l2, Eigen::MatrixXd* grad_weights = nullptr,
                        Eigen::VectorXd* grad_bias = nullptr);

// Deterministic full-batch L-BFGS with Armijo backtracking. Stops when the
// gradient infinity norm drops below `tol` or after `max_iter` iterations.
// Throws NonFinite if the objective diverges, PreconditionFailed unless
// rows >= classes >= 2.
ClassifierModel train_logreg(const EncodedMatrix& enc, double l2 = 1.0,
                             double tol = 1e-6, int max_iter = 1000);

}  // namespace featopt::metrics
