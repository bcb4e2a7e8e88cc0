// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/errors.hpp"
#include "featopt/types.hpp"

namespace featopt {

enum class ViolationKind {
  kMalformedDocument,
  kEmptyFeatureList,
  kTooManyFeatures,
  kDuplicateName,
  kBadIdentifier,
  kBadType,
  kBadCategoricalArity,
  kEmptyDescription,
  kEmptyExtractionPrompt,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string feature;  // empty for document-level violations
  std::string message;
};

std::string describe(const std::vector<Violation>& violations);

class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(std::vector<Violation> violations)
      : Error("feature set validation failed: " + describe(violations)),
        violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

bool is_valid_feature_name(std::string_view name);

// Collects every violation in a FeatureSet-shaped document. The document is
// either {"features": [...]} or a bare array of feature objects; each feature
// is {name, type, description, extraction_prompt[, categories]}.
std::vector<Violation> check_feature_set(const nlohmann::json& doc);

// Same checks on an already-typed FeatureSet.
std::vector<Violation> check_feature_set(const FeatureSet& fs);

// Returns the FeatureSet or throws ValidationFailed with the full list.
FeatureSet validate_feature_set(const nlohmann::json& doc);

nlohmann::json to_json(const FeatureDefinition& def);
nlohmann::json to_json(const FeatureSet& fs);

// Canonical, byte-stable rendering: sorted keys, features in order, two-space
// indentation. Used both in extractor prompts and for schema-length
// measurement.
std::string serialize_feature_schema(const FeatureSet& fs);

// Inverse of serialize_feature_schema; validates.
FeatureSet parse_feature_schema(const std::string& text);

// Parses "bool"/"int"/"float"/"literal" and common aliases.
std::optional<ValueKind> parse_value_kind(std::string_view text);

}  // namespace featopt
