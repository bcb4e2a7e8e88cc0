// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/metrics/logreg.hpp"

#include <cmath>
#include <deque>

#include "featopt/errors.hpp"

namespace featopt::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd ClassifierModel::logits(const MatrixXd& x) const {
  MatrixXd z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

MatrixXd ClassifierModel::probabilities(const MatrixXd& x) const {
  MatrixXd z = logits(x);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

std::vector<int> ClassifierModel::predict(const MatrixXd& x) const {
  MatrixXd z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    z.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double logreg_objective(const MatrixXd& x, const std::vector<int>& labels,
                        const MatrixXd& weights, const VectorXd& bias, double l2,
                        MatrixXd* grad_weights, VectorXd* grad_bias) {
  const Eigen::Index n = x.rows();
  MatrixXd z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  double loss = 0.0;
  // z becomes softmax(z) - onehot(y), the logit gradient.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = z.row(i).maxCoeff();
    const int y = labels[static_cast<std::size_t>(i)];
    const double zy = z(i, y);
    z.row(i) = (z.row(i).array() - m).exp();
    const double s = z.row(i).sum();
    loss += std::log(s) + m - zy;
    z.row(i) /= s;
    z(i, y) -= 1.0;
  }
  loss += 0.5 * l2 * weights.squaredNorm();
  if (grad_weights) *grad_weights = z.transpose() * x + l2 * weights;
  if (grad_bias) *grad_bias = z.colwise().sum().transpose();
  return loss;
}

namespace {

// Packs (W, b) into one vector: W column-major, then b.
VectorXd pack(const MatrixXd& w, const VectorXd& b) {
  VectorXd theta(w.size() + b.size());
  theta.head(w.size()) = Eigen::Map<const VectorXd>(w.data(), w.size());
  theta.tail(b.size()) = b;
  return theta;
}

void unpack(const VectorXd& theta, MatrixXd& w, VectorXd& b) {
  w = Eigen::Map<const MatrixXd>(theta.data(), w.rows(), w.cols());
  b = theta.tail(b.size());
}

}  // namespace

ClassifierModel train_logreg(const EncodedMatrix& enc, double l2, double tol,
                             int max_iter) {
  const Eigen::Index n = enc.x.rows();
  const Eigen::Index p = enc.x.cols();
  const auto classes = static_cast<Eigen::Index>(enc.class_names.size());
  if (classes < 2 || n < classes) {
    throw PreconditionFailed("logistic regression needs rows >= classes >= 2");
  }
  if (l2 < 0.0) throw PreconditionFailed("l2 must be >= 0");

  ClassifierModel model;
  model.class_names = enc.class_names;
  model.l2 = l2;
  MatrixXd w = MatrixXd::Zero(classes, p);
  VectorXd b = VectorXd::Zero(classes);
  MatrixXd gw(classes, p);
  VectorXd gb(classes);

  auto evaluate = [&](const VectorXd& theta, VectorXd& grad) {
    unpack(theta, w, b);
    double f = logreg_objective(enc.x, enc.labels, w, b, l2, &gw, &gb);
    grad = pack(gw, gb);
    return f;
  };

  VectorXd theta = VectorXd::Zero(classes * p + classes);
  VectorXd grad;
  double f = evaluate(theta, grad);
  if (!std::isfinite(f)) throw NonFinite("initial logistic loss is not finite");
  model.loss_history.push_back(f);

  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < tol) {
      model.converged = true;
      break;
    }
    // Two-loop recursion.
    VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
    }
    double step = s_hist.empty()
                      ? std::min(1.0, 1.0 / grad.lpNorm<Eigen::Infinity>())
                      : 1.0;

    VectorXd next, next_grad;
    double next_f = f;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      next = theta + step * direction;
      next_f = evaluate(next, next_grad);
      if (std::isfinite(next_f) && next_f <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable

    VectorXd s = next - theta;
    VectorXd y = next_grad - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(next);
    grad = std::move(next_grad);
    f = next_f;
    model.loss_history.push_back(f);
  }
  if (!model.converged && grad.lpNorm<Eigen::Infinity>() < tol) model.converged = true;

  unpack(theta, w, b);
  if (!w.allFinite() || !b.allFinite() || !std::isfinite(f)) {
    throw NonFinite("logistic regression diverged");
  }
  model.weights = std::move(w);
  model.bias = std::move(b);
  model.iterations = iter;
  model.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
  return model;
}

}  // namespace featopt::metrics
