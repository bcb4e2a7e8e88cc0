// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "featopt/errors.hpp"

namespace featopt {

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::kBoolean:
      return "bool";
    case ValueKind::kInteger:
      return "int";
    case ValueKind::kReal:
      return "float";
    case ValueKind::kCategorical:
      return "literal";
  }
  return "unknown";
}

std::string_view to_string(MissingReason reason) {
  switch (reason) {
    case MissingReason::kExtractionRefused:
      return "extraction-refused";
    case MissingReason::kParseFailed:
      return "parse-failed";
    case MissingReason::kOutOfVocabulary:
      return "out-of-vocabulary";
  }
  return "unknown";
}

std::optional<MissingReason> missing_reason_from_string(std::string_view text) {
  for (auto r : {MissingReason::kExtractionRefused, MissingReason::kParseFailed,
                 MissingReason::kOutOfVocabulary}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureSet::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

std::optional<std::size_t> FeatureSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

void validate_splits(const DatasetSplits& splits) {
  if (splits.class_names.size() < 2) {
    throw PreconditionFailed("dataset needs at least two classes");
  }
  std::unordered_set<std::string> classes(splits.class_names.begin(),
                                          splits.class_names.end());
  if (classes.size() != splits.class_names.size()) {
    throw PreconditionFailed("class names must be distinct");
  }
  std::unordered_set<std::string> train_ids;
  for (const auto& ex : splits.train) {
    if (!classes.contains(ex.label)) {
      throw PreconditionFailed("train label '" + ex.label + "' not a known class");
    }
    train_ids.insert(ex.id);
  }
  for (const auto& ex : splits.annotation) {
    if (!classes.contains(ex.label)) {
      throw PreconditionFailed("annotation label '" + ex.label +
                               "' not a known class");
    }
    if (train_ids.contains(ex.id)) {
      throw PreconditionFailed("example '" + ex.id +
                               "' appears in both train and annotation splits");
    }
  }
}

bool value_conforms(const FeatureValue& value, const FeatureValueType& type) {
  if (is_missing(value)) return true;
  switch (type.kind) {
    case ValueKind::kBoolean:
      return std::holds_alternative<bool>(value);
    case ValueKind::kInteger:
      return std::holds_alternative<std::int64_t>(value);
    case ValueKind::kReal:
      return std::holds_alternative<double>(value) &&
             std::isfinite(std::get<double>(value));
    case ValueKind::kCategorical: {
      const auto* c = std::get_if<Category>(&value);
      return c != nullptr &&
             std::find(type.categories.begin(), type.categories.end(),
                       c->value) != type.categories.end();
    }
  }
  return false;
}

FeatureMatrix::FeatureMatrix(FeatureSet feature_set,
                             std::vector<std::string> class_names,
                             std::vector<FeatureRow> rows)
    : feature_set_(std::move(feature_set)),
      class_names_(std::move(class_names)),
      rows_(std::move(rows)) {
  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t c = 0; c < class_names_.size(); ++c) {
    class_index.emplace(class_names_[c], c);
  }
  std::unordered_set<std::string> ids;
  label_index_.reserve(rows_.size());
  for (const auto& row : rows_) {
    if (row.values.size() != feature_set_.size()) {
      throw PreconditionFailed("row '" + row.id + "' has " +
                               std::to_string(row.values.size()) +
                               " values, expected " +
                               std::to_string(feature_set_.size()));
    }
    if (!ids.insert(row.id).second) throw DuplicateId(row.id);
    for (std::size_t j = 0; j < row.values.size(); ++j) {
      if (!value_conforms(row.values[j], feature_set_.features[j].value_type)) {
        throw PreconditionFailed("row '" + row.id + "' feature '" +
                                 feature_set_.features[j].name +
                                 "' holds a value of the wrong type");
      }
    }
    if (class_names_.empty()) {
      label_index_.push_back(0);
      continue;
    }
    auto it = class_index.find(row.label);
    if (it == class_index.end()) {
      throw PreconditionFailed("row '" + row.id + "' label '" + row.label +
                               "' not a known class");
    }
    label_index_.push_back(it->second);
  }
}

std::size_t FeatureMatrix::label_index(std::size_t row) const {
  return label_index_.at(row);
}

FeatureMatrix FeatureMatrix::subset(const std::vector<std::size_t>& rows) const {
  std::vector<FeatureRow> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(rows_.at(r));
  return FeatureMatrix(feature_set_, class_names_, std::move(out));
}

}  // namespace featopt
