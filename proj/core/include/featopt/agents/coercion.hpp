// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include "featopt/types.hpp"

namespace featopt::agents {

// Converts one raw extractor answer to the declared type:
//   bool  <- true/false, 0/1, "true"/"false"/"yes"/"no"
//   int   <- integers, integral floats, numeric strings
//   float <- finite numbers, numeric strings
//   literal <- a listed category (exact, then case-insensitive and trimmed);
//              other strings become Missing(out-of-vocabulary)
// Anything else, including null, is Missing(parse-failed).
FeatureValue coerce_value(const nlohmann::json& raw, const FeatureValueType& type);

nlohmann::json value_to_json(const FeatureValue& value);

// Inverse of value_to_json for a known type; unrecognized input is
// Missing(parse-failed).
FeatureValue value_from_json(const nlohmann::json& doc, const FeatureValueType& type);

}  // namespace featopt::agents
