// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "featopt/types.hpp"

namespace featopt::metrics {

// Discrete bucket per row. Boolean and categorical features use their values;
// integer and real features use equal-frequency bins over the observed
// values, min(max_bins, #distinct) of them. Missing gets its own bucket.
std::vector<int> discretize(const FeatureMatrix& matrix, std::size_t feature,
                            std::size_t max_bins = 8);

// Plug-in estimates in nats over the observed cells.
double entropy(const std::vector<int>& x);
double mutual_information(const std::vector<int>& x, const std::vector<int>& y);

std::vector<int> label_indices(const FeatureMatrix& matrix);

// MI between the discretized feature and the label. Throws
// PreconditionFailed for an unknown feature name.
double mutual_information(const FeatureMatrix& matrix, std::string_view feature,
                          std::size_t max_bins = 8);

struct CoverageReport {
  std::vector<double> per_feature;  // fraction of non-Missing rows
  double mean = 0.0;
};

CoverageReport coverage(const FeatureMatrix& matrix);

struct LeakageOptions {
  double normalized_mi_threshold = 0.95;
  std::size_t min_rows_for_mi = 20;
  std::size_t max_bins = 8;
};

struct LeakageFlag {
  std::string feature;
  bool by_name = false;
  bool by_mutual_information = false;
  double normalized_mi = 0.0;
  std::vector<std::string> reasons;
};

// Flags a feature whose underscore-separated name tokens include "label" or a
// token of a class name, or (with enough rows) whose MI(f; Y) / H(Y) reaches
// the threshold.
std::vector<LeakageFlag> detect_leakage(const FeatureMatrix& matrix,
                                        const std::vector<std::string>& class_names,
                                        const LeakageOptions& options = {});

// Lower-cased alphanumeric tokens of a class name or feature name.
std::vector<std::string> name_tokens(std::string_view name);

}  // namespace featopt::metrics
