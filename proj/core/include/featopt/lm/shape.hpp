// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace featopt::lm {

// A small structural description of an expected JSON document: typed fields,
// required flags, list bounds, string enums and numeric ranges. Renders to a
// JSON Schema fragment for prompts and validates parsed completions.
class Shape {
 public:
  enum class Kind { kAny, kString, kNumber, kInteger, kBoolean, kArray, kObject };

  static Shape any() { return Shape(Kind::kAny); }
  static Shape string() { return Shape(Kind::kString); }
  static Shape number() { return Shape(Kind::kNumber); }
  static Shape integer() { return Shape(Kind::kInteger); }
  static Shape boolean() { return Shape(Kind::kBoolean); }
  static Shape array(Shape element, std::size_t min_items = 0,
                     std::optional<std::size_t> max_items = std::nullopt);
  static Shape object() { return Shape(Kind::kObject); }

  Shape& field(std::string name, Shape shape, bool required = true);
  Shape& one_of(std::vector<std::string> values);
  Shape& range(double min, double max);
  Shape& non_empty();
  Shape& describe(std::string description);

  Kind kind() const { return kind_; }

  // Empty when `doc` conforms; otherwise one message per problem, each
  // prefixed with a JSON-pointer-like path.
  std::vector<std::string> validate(const nlohmann::json& doc) const;

  nlohmann::json json_schema() const;

 private:
  explicit Shape(Kind kind) : kind_(kind) {}
  void validate_at(const nlohmann::json& doc, const std::string& path,
                   std::vector<std::string>& errors) const;

  struct Field {
    std::string name;
    std::shared_ptr<const Shape> shape;
    bool required;
  };

  Kind kind_;
  std::vector<Field> fields_;
  std::shared_ptr<const Shape> element_;
  std::size_t min_items_ = 0;
  std::optional<std::size_t> max_items_;
  std::vector<std::string> enum_values_;
  std::optional<double> min_;
  std::optional<double> max_;
  bool non_empty_ = false;
  std::string description_;
};

// Returns the first balanced `{...}` span of `text` that parses as a JSON
// object, skipping prose and code fences around it.
std::optional<nlohmann::json> extract_first_json_object(std::string_view text);

}  // namespace featopt::lm
