// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <exception>
#include <iostream>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "featopt/errors.hpp"
#include "featopt/io/commands.hpp"

namespace {

using featopt::io::CommonOptions;
using featopt::io::DatasetFormat;

struct ModeFlag {
  std::string text;
};

void add_common(CLI::App& app, CommonOptions& common, ModeFlag& mode) {
  app.add_option("--config", common.config, "TOML run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Override search.seed");
  app.add_option("--mode", mode.text, "Proposer mode")
      ->check(CLI::IsMember({"reflective", "scalar", "scalar_only"}));
  app.add_option("--scripted-lm", common.scripted_lm,
                 "Transcript JSON replacing the chat endpoint")
      ->check(CLI::ExistingFile);
  app.add_option("--run-dir", common.run_dir, "Override run.dir");
}

void apply_mode(CommonOptions& common, const ModeFlag& mode) {
  if (!mode.text.empty()) common.mode = featopt::agents::proposer_mode_from_string(mode.text);
}

std::optional<DatasetFormat> parse_format(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "jsonl") return DatasetFormat::kJsonl;
  if (text == "csv") return DatasetFormat::kCsv;
  throw featopt::ConfigError("unknown dataset format '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"featopt: discovers interpretable text features by optimizing the proposer prompt"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  CommonOptions optimize_opts;
  ModeFlag optimize_mode;
  auto* optimize = app.add_subcommand("optimize", "Search instructions and example sets");
  add_common(*optimize, optimize_opts, optimize_mode);

  featopt::io::ExtractOptions extract_opts;
  ModeFlag extract_mode;
  std::string extract_format;
  auto* extract = app.add_subcommand("extract", "Apply a learned feature schema to new texts");
  add_common(*extract, extract_opts.common, extract_mode);
  extract->add_option("--features", extract_opts.features, "best_features.json or a schema")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--input", extract_opts.input, "Dataset to annotate")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--output", extract_opts.output, "JSON-lines output")->required();
  extract->add_option("--format", extract_format, "jsonl or csv (default: by extension)");

  featopt::io::EvaluateOptions evaluate_opts;
  std::string labels_format;
  auto* evaluate = app.add_subcommand("evaluate", "Re-score an extracted feature matrix");
  evaluate->add_option("--features", evaluate_opts.features, "JSON lines written by extract")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--schema", evaluate_opts.schema, "best_features.json or a schema")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--labels", evaluate_opts.labels, "Dataset supplying labels by id")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--labels-format", labels_format, "jsonl or csv");
  evaluate->add_option("--output", evaluate_opts.output, "Metrics JSON");
  evaluate->add_option("--k-folds", evaluate_opts.k_folds)->check(CLI::Range(2, 1000));
  evaluate->add_option("--l2", evaluate_opts.l2)->check(CLI::NonNegativeNumber);
  evaluate->add_option("--seed", evaluate_opts.seed);

  std::vector<std::filesystem::path> compare_dirs;
  std::filesystem::path compare_output;
  auto* compare = app.add_subcommand("compare", "Compare runs, e.g. reflective against scalar");
  compare->add_option("run_dirs", compare_dirs, "Run directories")->required()->expected(2, -1);
  compare->add_option("--output", compare_output, "Markdown output");

  featopt::io::CostOptions cost_opts;
  ModeFlag cost_mode;
  auto* cost = app.add_subcommand("cost", "Estimate (and reconcile) token cost");
  add_common(*cost, cost_opts.common, cost_mode);
  cost->add_option("--m-fp", cost_opts.m_fp, "Proposer calls per trial");
  cost->add_option("--m-e", cost_opts.m_e, "Extractor calls per text");
  cost->add_option("--m-s", cost_opts.m_s, "Scorer calls per trial");
  cost->add_option("--L-phi", cost_opts.L_phi, "Proposer prompt tokens");
  cost->add_option("--L-t", cost_opts.L_t, "Tokens per text");
  cost->add_option("--L-f", cost_opts.L_f, "Tokens per feature schema");
  cost->add_option("--N-A", cost_opts.N_A, "Annotation texts");
  cost->add_option("--N-d", cost_opts.N_d, "Example sets");
  cost->add_option("--N-iter", cost_opts.N_iter, "Trials");

  CLI11_PARSE(app, argc, argv);

  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*optimize) {
      apply_mode(optimize_opts, optimize_mode);
      return featopt::io::run_optimize(optimize_opts, std::cout);
    }
    if (*extract) {
      apply_mode(extract_opts.common, extract_mode);
      extract_opts.format = parse_format(extract_format);
      return featopt::io::run_extract(extract_opts, std::cout);
    }
    if (*evaluate) {
      evaluate_opts.labels_format = parse_format(labels_format);
      return featopt::io::run_evaluate(evaluate_opts, std::cout);
    }
    if (*compare) return featopt::io::run_compare(compare_dirs, compare_output, std::cout);
    if (*cost) {
      apply_mode(cost_opts.common, cost_mode);
      return featopt::io::run_cost(cost_opts, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "featopt: " << e.what() << "\n";
    return featopt::io::kExitFailure;
  }
  return featopt::io::kExitFailure;
}
