// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "featopt/cost/cost_model.hpp"
#include "featopt/lm/types.hpp"
#include "featopt/optimizer/search.hpp"

namespace featopt::io {

using ConfigValue = std::variant<bool, std::int64_t, double, std::string>;
using ConfigTable = std::map<std::string, ConfigValue>;

// Looks up environment variables for ${NAME} interpolation.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Parses the flat `key = value` format: dotted keys, optional [section]
// headers that prefix later keys, "strings" (with \" \\ \n \t escapes),
// integers, reals, true/false, and # comments. ${NAME} inside strings is
// replaced from `env`; an unset variable is a ConfigError.
ConfigTable parse_config_text(const std::string& text, const EnvLookup& env = process_env());

enum class DatasetFormat { kJsonl, kCsv };

struct DatasetConfig {
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::kJsonl;
  std::string text_field = "text";
  std::string label_field = "label";
  std::string id_field = "id";
  std::size_t train_per_class = 16;
  std::size_t annotation_size = 512;
};

struct RunConfig {
  DatasetConfig dataset;
  lm::LmEndpoint endpoint;
  std::string api_key_env;  // variable holding the API key, if any
  optimizer::OptimizerConfig optimizer;
  cost::CostParams cost_weights;  // only the m_* weights are read from config
  std::filesystem::path run_dir;

  // Throws ConfigError. Relative paths resolve against `base_dir`; the
  // dataset file must exist when set.
  static RunConfig from_table(const ConfigTable& table,
                              const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path,
                        const EnvLookup& env = process_env());

  void validate() const;
  // Effective settings, secrets omitted, for run manifests.
  nlohmann::json to_json() const;
};

std::string_view to_string(DatasetFormat format);

}  // namespace featopt::io
