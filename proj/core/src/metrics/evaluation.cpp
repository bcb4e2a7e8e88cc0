// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/metrics/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "featopt/errors.hpp"
#include "featopt/metrics/shap.hpp"
#include "featopt/random.hpp"

namespace featopt::metrics {

using json = nlohmann::json;

double macro_f1(const ConfusionMatrix& confusion) {
  const std::size_t k = confusion.size();
  if (k == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t tp = confusion[c][c];
    std::int64_t fn = 0, fp = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fn += confusion[c][o];
      fp += confusion[o][c];
    }
    const std::int64_t denom = 2 * tp + fp + fn;
    if (denom > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(k);
}

namespace {

std::uint64_t row_key(const FeatureMatrix& matrix, std::size_t row, std::uint64_t seed) {
  return derive_seed(seed, matrix.rows()[row].id);
}

// Rows sorted by (seed-keyed id hash, id): a canonical order independent of
// the input row order.
std::vector<std::size_t> canonical_order(const FeatureMatrix& matrix,
                                         std::vector<std::size_t> rows,
                                         std::uint64_t seed) {
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    auto ka = row_key(matrix, a, seed);
    auto kb = row_key(matrix, b, seed);
    if (ka != kb) return ka < kb;
    return matrix.rows()[a].id < matrix.rows()[b].id;
  });
  return rows;
}

}  // namespace

std::vector<std::size_t> assign_folds(const FeatureMatrix& matrix, std::size_t k_folds,
                                      std::uint64_t seed) {
  if (k_folds < 2) throw PreconditionFailed("k_folds must be >= 2");
  const std::size_t classes = matrix.class_names().size();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
    members[matrix.label_index(i)].push_back(i);
  }
  std::vector<std::size_t> fold(matrix.num_rows(), 0);
  std::size_t offset = 0;
  for (auto& m : members) {
    auto ordered = canonical_order(matrix, std::move(m), seed);
    for (std::size_t r = 0; r < ordered.size(); ++r) {
      fold[ordered[r]] = (offset + r) % k_folds;
    }
    offset += ordered.size();
  }
  return fold;
}

CrossValidationResult cross_validated_f1(const FeatureMatrix& matrix,
                                         const EvaluationConfig& config) {
  const std::size_t classes = matrix.class_names().size();
  std::vector<std::size_t> per_class(classes, 0);
  for (std::size_t i = 0; i < matrix.num_rows(); ++i) ++per_class[matrix.label_index(i)];
  std::size_t present = 0;
  for (auto c : per_class) present += c > 0 ? 1 : 0;
  if (classes < 2 || present < 2) {
    throw DegenerateLabels("cross-validation needs at least two populated classes");
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (per_class[c] < config.k_folds) {
      throw TooFewPerClass("class '" + matrix.class_names()[c] + "' has " +
                           std::to_string(per_class[c]) + " rows, " +
                           std::to_string(config.k_folds) + " folds need one each");
    }
  }

  const auto fold = assign_folds(matrix, config.k_folds, config.seed);
  CrossValidationResult result;
  result.confusion.assign(classes, std::vector<std::int64_t>(classes, 0));
  result.predictions.assign(matrix.num_rows(), -1);
  std::vector<double> shap_sum(matrix.num_features(), 0.0);

  for (std::size_t k = 0; k < config.k_folds; ++k) {
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
      (fold[i] == k ? val_rows : train_rows).push_back(i);
    }
    train_rows = canonical_order(matrix, std::move(train_rows), config.seed);
    val_rows = canonical_order(matrix, std::move(val_rows), config.seed);

    const auto train = encode(matrix.subset(train_rows));
    const auto val = encode(matrix.subset(val_rows), &train.stats);
    auto model = train_logreg(train, config.l2, config.tol, config.max_iter);

    const auto predicted = model.predict(val.x);
    for (std::size_t r = 0; r < val_rows.size(); ++r) {
      result.predictions[val_rows[r]] = predicted[r];
      ++result.confusion[static_cast<std::size_t>(val.labels[r])]
                        [static_cast<std::size_t>(predicted[r])];
    }
    auto sums = linear_shap_importance_sum(model, val);
    for (std::size_t f = 0; f < shap_sum.size(); ++f) shap_sum[f] += sums[f];

    result.folds.push_back({k, train_rows.size(), val_rows.size(), model.iterations,
                            model.final_gradient_norm, model.converged});
    result.fold_models.push_back(std::move(model));
  }
  result.macro_f1 = macro_f1(result.confusion);
  result.shap_importance = shap_sum;
  for (auto& s : result.shap_importance) s /= static_cast<double>(matrix.num_rows());
  return result;
}

std::vector<std::string> MetricsBundle::leaked_features() const {
  std::vector<std::string> out;
  for (const auto& f : per_feature) {
    if (f.leakage_flag) out.push_back(f.name);
  }
  return out;
}

json MetricsBundle::to_json() const {
  json features = json::array();
  for (const auto& f : per_feature) {
    features.push_back({{"name", f.name},
                        {"shap_importance", f.shap_importance},
                        {"mutual_information", f.mutual_information},
                        {"coverage", f.coverage},
                        {"leakage_flag", f.leakage_flag},
                        {"leakage_reasons", f.leakage_reasons}});
  }
  json folds_json = json::array();
  for (const auto& d : folds) {
    folds_json.push_back({{"fold", d.fold},
                          {"train_rows", d.train_rows},
                          {"validation_rows", d.validation_rows},
                          {"iterations", d.iterations},
                          {"final_gradient_norm", d.final_gradient_norm},
                          {"converged", d.converged}});
  }
  return {{"ok", ok},
          {"note", note},
          {"macro_f1", macro_f1},
          {"class_names", class_names},
          {"per_feature", std::move(features)},
          {"confusion", confusion},
          {"folds", std::move(folds_json)},
          {"coverage_mean", coverage_mean}};
}

MetricsBundle MetricsBundle::from_json(const json& doc) {
  MetricsBundle b;
  b.ok = doc.at("ok").get<bool>();
  b.note = doc.value("note", std::string());
  b.macro_f1 = doc.at("macro_f1").get<double>();
  b.class_names = doc.at("class_names").get<std::vector<std::string>>();
  for (const auto& f : doc.at("per_feature")) {
    FeatureMetrics m;
    m.name = f.at("name").get<std::string>();
    m.shap_importance = f.at("shap_importance").get<double>();
    m.mutual_information = f.at("mutual_information").get<double>();
    m.coverage = f.at("coverage").get<double>();
    m.leakage_flag = f.at("leakage_flag").get<bool>();
    m.leakage_reasons = f.value("leakage_reasons", std::vector<std::string>{});
    b.per_feature.push_back(std::move(m));
  }
  b.confusion = doc.at("confusion").get<ConfusionMatrix>();
  for (const auto& d : doc.value("folds", json::array())) {
    b.folds.push_back({d.at("fold").get<std::size_t>(), d.at("train_rows").get<std::size_t>(),
                       d.at("validation_rows").get<std::size_t>(),
                       d.at("iterations").get<int>(),
                       d.at("final_gradient_norm").get<double>(),
                       d.at("converged").get<bool>()});
  }
  b.coverage_mean = doc.value("coverage_mean", 0.0);
  return b;
}

MetricsBundle compute_metrics(const FeatureMatrix& matrix,
                              const EvaluationConfig& config) {
  MetricsBundle bundle;
  bundle.class_names = matrix.class_names();
  const auto& fs = matrix.feature_set();
  const auto cov = coverage(matrix);
  bundle.coverage_mean = cov.mean;
  for (std::size_t f = 0; f < fs.size(); ++f) {
    FeatureMetrics m;
    m.name = fs.features[f].name;
    m.coverage = cov.per_feature[f];
    bundle.per_feature.push_back(std::move(m));
  }
  if (matrix.num_rows() == 0) {
    bundle.note = "no rows to evaluate";
    return bundle;
  }
  if (!matrix.class_names().empty()) {
    const auto labels = label_indices(matrix);
    for (std::size_t f = 0; f < fs.size(); ++f) {
      bundle.per_feature[f].mutual_information =
          mutual_information(discretize(matrix, f, config.leakage.max_bins), labels);
    }
  }
  for (const auto& flag : detect_leakage(matrix, matrix.class_names(), config.leakage)) {
    auto idx = fs.index_of(flag.feature);
    bundle.per_feature[*idx].leakage_flag = true;
    bundle.per_feature[*idx].leakage_reasons = flag.reasons;
  }

  const bool any_value = std::any_of(cov.per_feature.begin(), cov.per_feature.end(),
                                     [](double c) { return c > 0.0; });
  if (!any_value) {
    bundle.note = "no feature values were extracted (every value is Missing)";
    return bundle;
  }
  try {
    auto cv = cross_validated_f1(matrix, config);
    bundle.ok = true;
    bundle.macro_f1 = cv.macro_f1;
    bundle.confusion = std::move(cv.confusion);
    bundle.folds = std::move(cv.folds);
    for (std::size_t f = 0; f < fs.size(); ++f) {
      bundle.per_feature[f].shap_importance = cv.shap_importance[f];
    }
  } catch (const DegenerateLabels& e) {
    bundle.note = std::string("degenerate labels: ") + e.what();
  } catch (const TooFewPerClass& e) {
    bundle.note = std::string("too few rows per class: ") + e.what();
  }
  return bundle;
}

}  // namespace featopt::metrics
