// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/agents/coercion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace featopt::agents {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_number(const std::string& raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.erase(0, 1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::optional<double> as_number(const json& raw) {
  if (raw.is_number()) {
    double v = raw.get<double>();
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  }
  if (raw.is_string()) return parse_number(raw.get<std::string>());
  return std::nullopt;
}

const Missing kParseFailed{MissingReason::kParseFailed};

}  // namespace

FeatureValue coerce_value(const json& raw, const FeatureValueType& type) {
  switch (type.kind) {
    case ValueKind::kBoolean: {
      if (raw.is_boolean()) return raw.get<bool>();
      if (raw.is_number_integer() || raw.is_number_unsigned()) {
        auto v = raw.get<std::int64_t>();
        if (v == 0 || v == 1) return v == 1;
        return kParseFailed;
      }
      if (raw.is_number_float()) {
        double v = raw.get<double>();
        if (v == 0.0 || v == 1.0) return v == 1.0;
        return kParseFailed;
      }
      if (raw.is_string()) {
        auto s = lower(trim(raw.get<std::string>()));
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
      }
      return kParseFailed;
    }
    case ValueKind::kInteger: {
      if (raw.is_number_integer()) return raw.get<std::int64_t>();
      if (raw.is_number_unsigned()) {
        auto v = raw.get<std::uint64_t>();
        if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
          return kParseFailed;
        return static_cast<std::int64_t>(v);
      }
      auto v = as_number(raw);
      if (!v || std::floor(*v) != *v || std::fabs(*v) > 9.0e15) return kParseFailed;
      return static_cast<std::int64_t>(*v);
    }
    case ValueKind::kReal: {
      auto v = as_number(raw);
      if (!v) return kParseFailed;
      return *v;
    }
    case ValueKind::kCategorical: {
      if (!raw.is_string()) {
        // A bare number or boolean may still name a category ("1", "true").
        if (raw.is_number() || raw.is_boolean()) {
          auto text = raw.dump();
          for (const auto& c : type.categories)
            if (c == text) return Category{c};
          return Missing{MissingReason::kOutOfVocabulary};
        }
        return kParseFailed;
      }
      const auto s = raw.get<std::string>();
      for (const auto& c : type.categories)
        if (c == s) return Category{c};
      const auto folded = lower(trim(s));
      for (const auto& c : type.categories)
        if (lower(trim(c)) == folded) return Category{c};
      return Missing{MissingReason::kOutOfVocabulary};
    }
  }
  return kParseFailed;
}

json value_to_json(const FeatureValue& value) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Missing>) {
          return json{{"missing", std::string(to_string(v.reason))}};
        } else if constexpr (std::is_same_v<T, Category>) {
          return v.value;
        } else {
          return v;
        }
      },
      value);
}

FeatureValue value_from_json(const json& doc, const FeatureValueType& type) {
  if (doc.is_object()) {
    auto it = doc.find("missing");
    if (it != doc.end() && it->is_string())
      if (auto r = missing_reason_from_string(it->get<std::string>())) return Missing{*r};
    return kParseFailed;
  }
  auto v = coerce_value(doc, type);
  if (type.kind == ValueKind::kCategorical && is_missing(v)) return kParseFailed;
  return v;
}

}  // namespace featopt::agents
