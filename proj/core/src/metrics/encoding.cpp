// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/metrics/encoding.hpp"

#include <cmath>
#include <set>

#include "featopt/errors.hpp"

namespace featopt::metrics {

std::vector<std::size_t> EncodedMatrix::group(std::size_t feature) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].feature == feature) out.push_back(j);
  }
  return out;
}

namespace {

std::vector<ColumnDescriptor> layout(const FeatureSet& fs) {
  std::vector<ColumnDescriptor> cols;
  for (std::size_t f = 0; f < fs.size(); ++f) {
    const auto& type = fs.features[f].value_type;
    switch (type.kind) {
      case ValueKind::kBoolean:
        cols.push_back({f, ColumnRole::kNumeric, "", false});
        cols.push_back({f, ColumnRole::kMissingIndicator, "", false});
        break;
      case ValueKind::kInteger:
      case ValueKind::kReal:
        cols.push_back({f, ColumnRole::kNumeric, "", true});
        cols.push_back({f, ColumnRole::kMissingIndicator, "", false});
        break;
      case ValueKind::kCategorical:
        for (const auto& c : type.categories) {
          cols.push_back({f, ColumnRole::kOneHot, c, false});
        }
        cols.push_back({f, ColumnRole::kOneHot, "", false});
        break;
    }
  }
  return cols;
}

std::optional<double> numeric_value(const FeatureValue& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

}  // namespace

EncodedMatrix encode(const FeatureMatrix& matrix, const EncodingStats* fit_stats) {
  const auto& fs = matrix.feature_set();
  const std::size_t n = matrix.num_rows();
  EncodedMatrix enc;
  enc.columns = layout(fs);
  enc.class_names = matrix.class_names();
  enc.feature_names = fs.names();
  enc.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    enc.labels.push_back(static_cast<int>(matrix.label_index(i)));
  }

  const bool fitting = fit_stats == nullptr;
  if (fitting) {
    std::set<int> distinct(enc.labels.begin(), enc.labels.end());
    if (n < 2 || distinct.size() < 2) {
      throw DegenerateLabels("encoding needs at least 2 rows and 2 distinct labels");
    }
  }
  const std::size_t p = enc.columns.size();

  EncodingStats stats;
  if (fitting) {
    stats.impute.assign(fs.size(), 0.0);
    for (std::size_t f = 0; f < fs.size(); ++f) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& row : matrix.rows()) {
        if (auto v = numeric_value(row.values[f])) {
          sum += *v;
          ++count;
        }
      }
      stats.impute[f] = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }
  } else {
    stats = *fit_stats;
    if (stats.impute.size() != fs.size() || stats.center.size() != p ||
        stats.scale.size() != p) {
      throw ShapeMismatch("encoding stats do not match the feature layout");
    }
  }

  // Raw (unstandardized) design matrix.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto& col = enc.columns[j];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = matrix.rows()[i].values[col.feature];
      double value = 0.0;
      switch (col.role) {
        case ColumnRole::kNumeric:
          value = numeric_value(v).value_or(stats.impute[col.feature]);
          break;
        case ColumnRole::kMissingIndicator:
          value = is_missing(v) ? 1.0 : 0.0;
          break;
        case ColumnRole::kOneHot:
          if (col.category.empty()) {
            value = is_missing(v) ? 1.0 : 0.0;
          } else if (const auto* c = std::get_if<Category>(&v)) {
            value = c->value == col.category ? 1.0 : 0.0;
          }
          break;
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
    }
  }

  if (fitting) {
    stats.center.assign(p, 0.0);
    stats.scale.assign(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
      if (!enc.columns[j].standardized) continue;
      const std::size_t f = enc.columns[j].feature;
      double ss = 0.0;
      std::size_t count = 0;
      for (const auto& row : matrix.rows()) {
        if (auto v = numeric_value(row.values[f])) {
          ss += (*v - stats.impute[f]) * (*v - stats.impute[f]);
          ++count;
        }
      }
      stats.center[j] = stats.impute[f];
      double sd = count > 0 ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
      stats.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(stats.impute[f])) ? sd : 0.0;
    }
  }

  for (std::size_t j = 0; j < p; ++j) {
    if (!enc.columns[j].standardized) continue;
    auto col = x.col(static_cast<Eigen::Index>(j));
    if (stats.scale[j] == 0.0) {
      col.setZero();
    } else {
      col = (col.array() - stats.center[j]) / stats.scale[j];
    }
  }
  if (!x.allFinite()) throw NonFinite("encoded matrix contains non-finite values");

  if (fitting) stats.column_means = x.colwise().mean().transpose();
  enc.x = std::move(x);
  enc.stats = std::move(stats);
  return enc;
}

}  // namespace featopt::metrics
