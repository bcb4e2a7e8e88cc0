// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "featopt/agents/agents.hpp"
#include "featopt/io/config.hpp"
#include "featopt/lm/backend.hpp"

namespace featopt::io {

// Exit codes shared by the subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // bad input, config or endpoint
inline constexpr int kExitNoResult = 3;  // ran, but no trial succeeded

// Flags shared by the subcommands.
struct CommonOptions {
  std::filesystem::path config;       // empty: built-in defaults
  std::optional<std::uint64_t> seed;  // overrides search.seed
  std::optional<agents::ProposerMode> mode;
  std::filesystem::path scripted_lm;  // transcript replacing the endpoint
  std::filesystem::path run_dir;      // overrides run.dir
};

// Loads the config (or defaults) and applies the command-line overrides.
RunConfig resolve_config(const CommonOptions& options);

// A ScriptedLm when a transcript is given, else the HTTP endpoint.
std::shared_ptr<lm::ChatBackend> make_backend(const RunConfig& config,
                                              const std::filesystem::path& scripted_lm);

// Runs the optimizer and writes manifest.json, trials.jsonl,
// search_space.json, best_features.json, usage.json and report.md. An
// existing run directory with trials is resumed. The directory is created
// only once the first trial finishes.
int run_optimize(const CommonOptions& options, std::ostream& out);

struct ExtractOptions {
  CommonOptions common;
  std::filesystem::path features;  // best_features.json or a bare schema
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<DatasetFormat> format;  // default: from the extension
};

// Writes one JSON line per input record:
//   {"id": ..., "label": ... (if known), "values": {name: value | {"missing": reason}}}
int run_extract(const ExtractOptions& options, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path features;  // JSON lines as written by extract
  std::filesystem::path schema;    // best_features.json or a bare schema
  std::filesystem::path labels;    // optional dataset supplying labels by id
  std::optional<DatasetFormat> labels_format;
  std::filesystem::path output;    // optional metrics JSON
  std::size_t k_folds = 5;
  double l2 = 1.0;
  std::uint64_t seed = 0;
};

// Re-scores a realized matrix without any LM call. Throws TooFewPerClass or
// DegenerateLabels when cross-validation is impossible.
int run_evaluate(const EvaluateOptions& options, std::ostream& out);

int run_compare(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& output, std::ostream& out);

struct CostOptions {
  CommonOptions common;
  // Explicit parameters override those derived from the config and run.
  std::optional<double> m_fp, m_e, m_s, L_phi, L_t, L_f, N_A, N_d, N_iter;
};

// Prints the estimate; with a run directory, also reconciles it against the
// run's measured token usage.
int run_cost(const CostOptions& options, std::ostream& out);

DatasetFormat format_from_extension(const std::filesystem::path& path);

}  // namespace featopt::io
