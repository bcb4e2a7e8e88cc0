// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featopt/types.hpp"

namespace featopt::metrics {

enum class ColumnRole { kNumeric, kOneHot, kMissingIndicator };

struct ColumnDescriptor {
  std::size_t feature = 0;  // index into the FeatureSet
  ColumnRole role = ColumnRole::kNumeric;
  // One-hot columns: the category, or empty for the MISSING bucket.
  std::string category;
  bool standardized = false;
};

// Statistics learned on the fitted rows, reused to transform other rows.
struct EncodingStats {
  std::vector<double> impute;  // per feature: mean of observed raw values
  std::vector<double> center;  // per column
  std::vector<double> scale;   // per column; 0 zeroes the column
  Eigen::VectorXd column_means;  // per column, over fitted encoded rows
};

// Dense design matrix with its column layout:
//   Boolean           -> value column (0/1, Missing imputed with the fitted
//                        mean) + missing indicator
//   Integer / Real    -> standardized value column + missing indicator
//   Categorical (c)   -> c + 1 one-hot columns, the last for MISSING
struct EncodedMatrix {
  std::vector<ColumnDescriptor> columns;
  Eigen::MatrixXd x;
  std::vector<int> labels;  // index into class_names
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  EncodingStats stats;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  // Column indices belonging to the given source feature.
  std::vector<std::size_t> group(std::size_t feature) const;
};

// Fit mode (fit_stats == nullptr) needs >= 2 rows and >= 2 distinct labels,
// otherwise throws DegenerateLabels. Transform mode applies `fit_stats`.
EncodedMatrix encode(const FeatureMatrix& matrix,
                     const EncodingStats* fit_stats = nullptr);

}  // namespace featopt::metrics
