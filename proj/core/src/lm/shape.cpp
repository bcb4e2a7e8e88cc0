// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/lm/shape.hpp"

#include <algorithm>
#include <cmath>

namespace featopt::lm {

using json = nlohmann::json;

Shape Shape::array(Shape element, std::size_t min_items,
                   std::optional<std::size_t> max_items) {
  Shape s(Kind::kArray);
  s.element_ = std::make_shared<const Shape>(std::move(element));
  s.min_items_ = min_items;
  s.max_items_ = max_items;
  return s;
}

Shape& Shape::field(std::string name, Shape shape, bool required) {
  fields_.push_back(
      {std::move(name), std::make_shared<const Shape>(std::move(shape)), required});
  return *this;
}

Shape& Shape::one_of(std::vector<std::string> values) {
  enum_values_ = std::move(values);
  return *this;
}

Shape& Shape::range(double min, double max) {
  min_ = min;
  max_ = max;
  return *this;
}

Shape& Shape::non_empty() {
  non_empty_ = true;
  return *this;
}

Shape& Shape::describe(std::string description) {
  description_ = std::move(description);
  return *this;
}

std::vector<std::string> Shape::validate(const json& doc) const {
  std::vector<std::string> errors;
  validate_at(doc, "", errors);
  return errors;
}

namespace {

std::string where(const std::string& path) { return path.empty() ? "/" : path; }

}  // namespace

void Shape::validate_at(const json& doc, const std::string& path,
                        std::vector<std::string>& errors) const {
  auto fail = [&](const std::string& what) {
    errors.push_back(where(path) + ": " + what);
  };
  auto check_range = [&](double v) {
    if ((min_ && v < *min_) || (max_ && v > *max_)) {
      fail("value " + json(v).dump() + " outside [" + json(*min_).dump() + ", " +
           json(*max_).dump() + "]");
    }
  };
  switch (kind_) {
    case Kind::kAny:
      return;
    case Kind::kString: {
      if (!doc.is_string()) return fail("expected a string");
      const auto& s = doc.get_ref<const std::string&>();
      if (non_empty_ && s.find_first_not_of(" \t\r\n") == std::string::npos) {
        fail("string must not be empty");
      }
      if (!enum_values_.empty() &&
          std::find(enum_values_.begin(), enum_values_.end(), s) ==
              enum_values_.end()) {
        fail("'" + s + "' is not one of the allowed values");
      }
      return;
    }
    case Kind::kNumber:
      if (!doc.is_number()) return fail("expected a number");
      if (!std::isfinite(doc.get<double>())) return fail("number must be finite");
      check_range(doc.get<double>());
      return;
    case Kind::kInteger: {
      bool integral = doc.is_number_integer() ||
                      (doc.is_number_float() &&
                       std::floor(doc.get<double>()) == doc.get<double>());
      if (!integral) return fail("expected an integer");
      check_range(doc.get<double>());
      return;
    }
    case Kind::kBoolean:
      if (!doc.is_boolean()) fail("expected true or false");
      return;
    case Kind::kArray: {
      if (!doc.is_array()) return fail("expected a list");
      if (doc.size() < min_items_) {
        fail("expected at least " + std::to_string(min_items_) + " items, got " +
             std::to_string(doc.size()));
      }
      if (max_items_ && doc.size() > *max_items_) {
        fail("expected at most " + std::to_string(*max_items_) + " items, got " +
             std::to_string(doc.size()));
      }
      for (std::size_t i = 0; i < doc.size(); ++i) {
        element_->validate_at(doc[i], path + "/" + std::to_string(i), errors);
      }
      return;
    }
    case Kind::kObject:
      if (!doc.is_object()) return fail("expected an object");
      for (const auto& f : fields_) {
        auto it = doc.find(f.name);
        if (it == doc.end() || it->is_null()) {
          if (f.required) fail("missing required field '" + f.name + "'");
          continue;
        }
        f.shape->validate_at(*it, path + "/" + f.name, errors);
      }
      return;
  }
}

json Shape::json_schema() const {
  json out = json::object();
  switch (kind_) {
    case Kind::kAny:
      break;
    case Kind::kString:
      out["type"] = "string";
      if (!enum_values_.empty()) out["enum"] = enum_values_;
      break;
    case Kind::kNumber:
      out["type"] = "number";
      break;
    case Kind::kInteger:
      out["type"] = "integer";
      break;
    case Kind::kBoolean:
      out["type"] = "boolean";
      break;
    case Kind::kArray:
      out["type"] = "array";
      out["items"] = element_->json_schema();
      if (min_items_ > 0) out["minItems"] = min_items_;
      if (max_items_) out["maxItems"] = *max_items_;
      break;
    case Kind::kObject: {
      out["type"] = "object";
      json props = json::object();
      json required = json::array();
      for (const auto& f : fields_) {
        props[f.name] = f.shape->json_schema();
        if (f.required) required.push_back(f.name);
      }
      out["properties"] = std::move(props);
      out["required"] = std::move(required);
      break;
    }
  }
  if (min_) out["minimum"] = *min_;
  if (max_) out["maximum"] = *max_;
  if (!description_.empty()) out["description"] = description_;
  return out;
}

std::optional<json> extract_first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          auto parsed = json::parse(text.substr(start, i - start + 1), nullptr,
                                    /*allow_exceptions=*/false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace featopt::lm
