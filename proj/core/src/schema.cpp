// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace featopt {

using json = nlohmann::json;

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kMalformedDocument:
      return "MalformedDocument";
    case ViolationKind::kEmptyFeatureList:
      return "EmptyFeatureList";
    case ViolationKind::kTooManyFeatures:
      return "TooManyFeatures";
    case ViolationKind::kDuplicateName:
      return "DuplicateName";
    case ViolationKind::kBadIdentifier:
      return "BadIdentifier";
    case ViolationKind::kBadType:
      return "BadType";
    case ViolationKind::kBadCategoricalArity:
      return "BadCategoricalArity";
    case ViolationKind::kEmptyDescription:
      return "EmptyDescription";
    case ViolationKind::kEmptyExtractionPrompt:
      return "EmptyExtractionPrompt";
  }
  return "Unknown";
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += to_string(v.kind);
    if (!v.feature.empty()) out += " [" + v.feature + "]";
    out += ": " + v.message;
  }
  return out;
}

bool is_valid_feature_name(std::string_view name) {
  if (name.empty() || name.size() > kMaxFeatureNameLength) return false;
  if (name[0] < 'a' || name[0] > 'z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::optional<ValueKind> parse_value_kind(std::string_view text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "bool" || t == "boolean") return ValueKind::kBoolean;
  if (t == "int" || t == "integer") return ValueKind::kInteger;
  if (t == "float" || t == "real" || t == "number" || t == "double") {
    return ValueKind::kReal;
  }
  if (t == "literal" || t == "categorical" || t == "category" || t == "enum") {
    return ValueKind::kCategorical;
  }
  return std::nullopt;
}

namespace {

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

void check_categories(const std::vector<std::string>& categories,
                      const std::string& name, std::vector<Violation>& out) {
  if (categories.size() < 2 || categories.size() > kMaxCategories) {
    out.push_back({ViolationKind::kBadCategoricalArity, name,
                   "categorical features need between 2 and " +
                       std::to_string(kMaxCategories) + " categories, got " +
                       std::to_string(categories.size())});
    return;
  }
  std::set<std::string> seen;
  for (const auto& c : categories) {
    if (c.empty() || !seen.insert(c).second) {
      out.push_back({ViolationKind::kBadCategoricalArity, name,
                     "categories must be distinct and non-empty"});
      return;
    }
  }
}

// Shared tail of both check_feature_set overloads.
void check_definition(const FeatureDefinition& def, std::set<std::string>& names,
                      std::vector<Violation>& out) {
  if (!is_valid_feature_name(def.name)) {
    out.push_back({ViolationKind::kBadIdentifier, def.name,
                   "name must match [a-z][a-z0-9_]* and be at most 64 chars"});
  }
  if (!names.insert(def.name).second) {
    out.push_back({ViolationKind::kDuplicateName, def.name,
                   "feature name appears more than once"});
  }
  if (def.value_type.kind == ValueKind::kCategorical) {
    check_categories(def.value_type.categories, def.name, out);
  } else if (!def.value_type.categories.empty()) {
    out.push_back({ViolationKind::kBadType, def.name,
                   "only categorical features carry categories"});
  }
  if (is_blank(def.description)) {
    out.push_back({ViolationKind::kEmptyDescription, def.name,
                   "description is empty"});
  }
  if (is_blank(def.extraction_prompt)) {
    out.push_back({ViolationKind::kEmptyExtractionPrompt, def.name,
                   "extraction_prompt is empty"});
  }
}

void check_count(std::size_t n, std::vector<Violation>& out) {
  if (n == 0) {
    out.push_back({ViolationKind::kEmptyFeatureList, "", "no features given"});
  } else if (n > kMaxFeatures) {
    out.push_back({ViolationKind::kTooManyFeatures, "",
                   std::to_string(n) + " features exceeds the cap of " +
                       std::to_string(kMaxFeatures)});
  }
}

// Best-effort typed view of a feature object; records type problems.
FeatureDefinition read_definition(const json& obj, std::vector<Violation>& out) {
  FeatureDefinition def;
  def.name = string_field(obj, "name");
  def.description = string_field(obj, "description");
  def.extraction_prompt = string_field(obj, "extraction_prompt");
  const std::string type_text = string_field(obj, "type");
  auto kind = parse_value_kind(type_text);
  if (!kind) {
    out.push_back({ViolationKind::kBadType, def.name,
                   "unknown type '" + type_text + "'"});
    kind = ValueKind::kBoolean;
  }
  def.value_type.kind = *kind;
  auto cats = obj.find("categories");
  if (cats != obj.end() && !cats->is_null()) {
    if (!cats->is_array()) {
      out.push_back({ViolationKind::kBadType, def.name,
                     "categories must be a list of strings"});
    } else {
      for (const auto& c : *cats) {
        if (c.is_string()) {
          def.value_type.categories.push_back(c.get<std::string>());
        } else {
          out.push_back({ViolationKind::kBadType, def.name,
                         "categories must be a list of strings"});
          break;
        }
      }
    }
  }
  // Models often attach an empty list to non-categorical features.
  if (def.value_type.kind != ValueKind::kCategorical) {
    def.value_type.categories.clear();
  }
  return def;
}

const json* feature_array(const json& doc) {
  if (doc.is_array()) return &doc;
  if (doc.is_object()) {
    auto it = doc.find("features");
    if (it != doc.end() && it->is_array()) return &*it;
  }
  return nullptr;
}

}  // namespace

std::vector<Violation> check_feature_set(const FeatureSet& fs) {
  std::vector<Violation> out;
  check_count(fs.size(), out);
  std::set<std::string> names;
  for (const auto& def : fs.features) check_definition(def, names, out);
  return out;
}

std::vector<Violation> check_feature_set(const json& doc) {
  std::vector<Violation> out;
  const json* arr = feature_array(doc);
  if (arr == nullptr) {
    out.push_back({ViolationKind::kMalformedDocument, "",
                   "expected an object with a 'features' list"});
    return out;
  }
  check_count(arr->size(), out);
  std::set<std::string> names;
  for (const auto& item : *arr) {
    if (!item.is_object()) {
      out.push_back({ViolationKind::kMalformedDocument, "",
                     "feature entries must be objects"});
      continue;
    }
    auto def = read_definition(item, out);
    check_definition(def, names, out);
  }
  return out;
}

FeatureSet validate_feature_set(const json& doc) {
  auto violations = check_feature_set(doc);
  if (!violations.empty()) throw ValidationFailed(std::move(violations));
  FeatureSet fs;
  std::vector<Violation> unused;
  for (const auto& item : *feature_array(doc)) {
    fs.features.push_back(read_definition(item, unused));
  }
  return fs;
}

json to_json(const FeatureDefinition& def) {
  json obj = json::object();
  obj["name"] = def.name;
  obj["type"] = std::string(to_string(def.value_type.kind));
  obj["description"] = def.description;
  obj["extraction_prompt"] = def.extraction_prompt;
  if (def.value_type.kind == ValueKind::kCategorical) {
    obj["categories"] = def.value_type.categories;
  }
  return obj;
}

json to_json(const FeatureSet& fs) {
  json arr = json::array();
  for (const auto& def : fs.features) arr.push_back(to_json(def));
  return json{{"features", std::move(arr)}};
}

std::string serialize_feature_schema(const FeatureSet& fs) {
  // nlohmann::json objects are std::map backed, so keys come out sorted.
  return to_json(fs).dump(2);
}

FeatureSet parse_feature_schema(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw ValidationFailed({{ViolationKind::kMalformedDocument, "",
                             "schema text is not valid JSON"}});
  }
  return validate_feature_set(doc);
}

}  // namespace featopt
