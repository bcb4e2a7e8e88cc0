// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/metrics/information.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "featopt/errors.hpp"

namespace featopt::metrics {

namespace {

std::vector<int> bin_numeric(const std::vector<std::optional<double>>& values,
                             std::size_t max_bins) {
  std::map<double, std::size_t> counts;
  std::size_t observed = 0;
  for (const auto& v : values) {
    if (v) {
      ++counts[*v];
      ++observed;
    }
  }
  const std::size_t bins = std::min(max_bins, counts.size());
  // Distinct values in ascending order map to the bin holding the start of
  // their run in the sorted sample, so ties never straddle a boundary.
  std::map<double, int> bin_of;
  std::size_t before = 0;
  for (const auto& [value, count] : counts) {
    auto b = static_cast<int>((before * bins) / std::max<std::size_t>(observed, 1));
    bin_of[value] = std::min<int>(b, static_cast<int>(bins) - 1);
    before += count;
  }
  const int missing_bucket = static_cast<int>(bins);
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(v ? bin_of[*v] : missing_bucket);
  return out;
}

}  // namespace

std::vector<int> discretize(const FeatureMatrix& matrix, std::size_t feature,
                            std::size_t max_bins) {
  const auto& type = matrix.feature_set().features.at(feature).value_type;
  std::vector<int> out;
  out.reserve(matrix.num_rows());
  switch (type.kind) {
    case ValueKind::kBoolean:
      for (const auto& row : matrix.rows()) {
        const auto& v = row.values[feature];
        out.push_back(is_missing(v) ? 2 : (std::get<bool>(v) ? 1 : 0));
      }
      return out;
    case ValueKind::kCategorical: {
      const int missing_bucket = static_cast<int>(type.categories.size());
      for (const auto& row : matrix.rows()) {
        const auto* c = std::get_if<Category>(&row.values[feature]);
        if (c == nullptr) {
          out.push_back(missing_bucket);
          continue;
        }
        auto it = std::find(type.categories.begin(), type.categories.end(), c->value);
        out.push_back(static_cast<int>(it - type.categories.begin()));
      }
      return out;
    }
    case ValueKind::kInteger:
    case ValueKind::kReal: {
      std::vector<std::optional<double>> values;
      values.reserve(matrix.num_rows());
      for (const auto& row : matrix.rows()) {
        const auto& v = row.values[feature];
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
          values.emplace_back(static_cast<double>(*i));
        } else if (const auto* d = std::get_if<double>(&v)) {
          values.emplace_back(*d);
        } else {
          values.emplace_back(std::nullopt);
        }
      }
      return bin_numeric(values, max_bins);
    }
  }
  return out;
}

double entropy(const std::vector<int>& x) {
  if (x.empty()) return 0.0;
  std::map<int, std::int64_t> counts;
  for (int v : x) ++counts[v];
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double cnt = static_cast<double>(c);
    h += cnt * std::log(n / cnt);
  }
  return h / n;
}

double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ShapeMismatch("MI inputs differ in length");
  if (x.empty()) return 0.0;
  std::map<int, std::int64_t> cx, cy;
  std::map<std::pair<int, int>, std::int64_t> cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[x[i]];
    ++cy[y[i]];
    ++cxy[{x[i], y[i]}];
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  // Counts keep n*c(x,y)/(c(x)c(y)) exact for independent cells.
  for (const auto& [key, c] : cxy) {
    const double joint = static_cast<double>(c);
    const double ratio =
        (joint * n) / (static_cast<double>(cx[key.first]) * static_cast<double>(cy[key.second]));
    mi += joint * std::log(ratio);
  }
  return std::max(0.0, mi / n);
}

std::vector<int> label_indices(const FeatureMatrix& matrix) {
  std::vector<int> out;
  out.reserve(matrix.num_rows());
  for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
    out.push_back(static_cast<int>(matrix.label_index(i)));
  }
  return out;
}

double mutual_information(const FeatureMatrix& matrix, std::string_view feature,
                          std::size_t max_bins) {
  auto idx = matrix.feature_set().index_of(feature);
  if (!idx) throw PreconditionFailed("unknown feature '" + std::string(feature) + "'");
  return mutual_information(discretize(matrix, *idx, max_bins), label_indices(matrix));
}

CoverageReport coverage(const FeatureMatrix& matrix) {
  CoverageReport report;
  const std::size_t k = matrix.num_features();
  report.per_feature.assign(k, 0.0);
  if (matrix.num_rows() == 0 || k == 0) return report;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t present = 0;
    for (const auto& row : matrix.rows()) present += is_missing(row.values[f]) ? 0 : 1;
    report.per_feature[f] =
        static_cast<double>(present) / static_cast<double>(matrix.num_rows());
  }
  double sum = 0.0;
  for (double c : report.per_feature) sum += c;
  report.mean = sum / static_cast<double>(k);
  return report;
}

std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : name) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<LeakageFlag> detect_leakage(const FeatureMatrix& matrix,
                                        const std::vector<std::string>& class_names,
                                        const LeakageOptions& options) {
  std::set<std::string> class_tokens;
  for (const auto& c : class_names) {
    for (auto& t : name_tokens(c)) class_tokens.insert(std::move(t));
  }
  const bool use_mi = matrix.num_rows() >= options.min_rows_for_mi &&
                      !matrix.class_names().empty();
  std::vector<int> labels;
  double label_entropy = 0.0;
  if (use_mi) {
    labels = label_indices(matrix);
    label_entropy = entropy(labels);
  }

  std::vector<LeakageFlag> flags;
  const auto& features = matrix.feature_set().features;
  for (std::size_t f = 0; f < features.size(); ++f) {
    LeakageFlag flag;
    flag.feature = features[f].name;
    for (const auto& token : name_tokens(features[f].name)) {
      if (token == "label") {
        flag.by_name = true;
        flag.reasons.push_back("name contains the token 'label'");
        break;
      }
      if (class_tokens.contains(token)) {
        flag.by_name = true;
        flag.reasons.push_back("name contains class-name token '" + token + "'");
        break;
      }
    }
    if (use_mi && label_entropy > 0.0) {
      double mi = mutual_information(discretize(matrix, f, options.max_bins), labels);
      flag.normalized_mi = mi / label_entropy;
      if (flag.normalized_mi >= options.normalized_mi_threshold) {
        flag.by_mutual_information = true;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "normalized MI %.4f >= %.2f", flag.normalized_mi,
                      options.normalized_mi_threshold);
        flag.reasons.emplace_back(buf);
      }
    }
    if (flag.by_name || flag.by_mutual_information) flags.push_back(std::move(flag));
  }
  return flags;
}

}  // namespace featopt::metrics
