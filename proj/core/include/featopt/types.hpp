// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace featopt {

enum class ValueKind { kBoolean, kInteger, kReal, kCategorical };

std::string_view to_string(ValueKind kind);

inline constexpr std::size_t kMaxCategories = 32;
inline constexpr std::size_t kMaxFeatures = 32;
inline constexpr std::size_t kMaxFeatureNameLength = 64;

struct FeatureValueType {
  ValueKind kind = ValueKind::kBoolean;
  // Non-empty iff kind == kCategorical.
  std::vector<std::string> categories;

  static FeatureValueType boolean() { return {ValueKind::kBoolean, {}}; }
  static FeatureValueType integer() { return {ValueKind::kInteger, {}}; }
  static FeatureValueType real() { return {ValueKind::kReal, {}}; }
  static FeatureValueType categorical(std::vector<std::string> categories) {
    return {ValueKind::kCategorical, std::move(categories)};
  }

  bool operator==(const FeatureValueType&) const = default;
};

// A corpus-level feature proposed by the language model.
struct FeatureDefinition {
  std::string name;
  FeatureValueType value_type;
  std::string description;
  std::string extraction_prompt;

  bool operator==(const FeatureDefinition&) const = default;
};

struct FeatureSet {
  std::vector<FeatureDefinition> features;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const FeatureSet&) const = default;
};

struct LabeledExample {
  std::string id;
  std::string text;
  std::string label;

  bool operator==(const LabeledExample&) const = default;
};

struct DatasetSplits {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> annotation;
  std::vector<std::string> class_names;
};

// Throws PreconditionFailed if the splits overlap by id, carry labels outside
// class_names, or have fewer than two classes.
void validate_splits(const DatasetSplits& splits);

struct ExampleSet {
  std::size_t set_id = 0;
  std::vector<LabeledExample> examples;
};

// One point of the search space: an instruction paired with an example set.
struct PromptCandidate {
  std::size_t instruction_id = 0;
  std::size_t example_set_id = 0;

  auto operator<=>(const PromptCandidate&) const = default;
};

enum class MissingReason { kExtractionRefused, kParseFailed, kOutOfVocabulary };

std::string_view to_string(MissingReason reason);
std::optional<MissingReason> missing_reason_from_string(std::string_view text);

struct Missing {
  MissingReason reason = MissingReason::kParseFailed;
  bool operator==(const Missing&) const = default;
};

struct Category {
  std::string value;
  bool operator==(const Category&) const = default;
};

using FeatureValue = std::variant<Missing, bool, std::int64_t, double, Category>;

inline bool is_missing(const FeatureValue& v) {
  return std::holds_alternative<Missing>(v);
}

// True when `value` is Missing or has the alternative matching `type`, with
// categorical members drawn from the category list and reals finite.
bool value_conforms(const FeatureValue& value, const FeatureValueType& type);

struct FeatureRow {
  std::string id;
  std::string label;  // empty when unlabelled
  std::vector<FeatureValue> values;
};

// Realized feature vectors. Construction rejects ragged rows, duplicate ids,
// non-conforming values, and labels outside class_names (when given).
class FeatureMatrix {
 public:
  FeatureMatrix(FeatureSet feature_set, std::vector<std::string> class_names,
                std::vector<FeatureRow> rows);

  const FeatureSet& feature_set() const { return feature_set_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<FeatureRow>& rows() const { return rows_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_features() const { return feature_set_.size(); }

  // Index of the row's label within class_names.
  std::size_t label_index(std::size_t row) const;

  // Same features and classes, restricted to the given rows in that order.
  FeatureMatrix subset(const std::vector<std::size_t>& rows) const;

 private:
  FeatureSet feature_set_;
  std::vector<std::string> class_names_;
  std::vector<FeatureRow> rows_;
  std::vector<std::size_t> label_index_;
};

}  // namespace featopt
