// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/lm/gateway.hpp"
#include "featopt/optimizer/search.hpp"

namespace featopt::io {

class RunLocked : public Error {
 public:
  using Error::Error;
};

struct TrialLog {
  std::vector<optimizer::TrialRecord> trials;
  // Set when the last line was cut short (e.g. by a crash mid-write).
  bool truncated_tail = false;
  std::string diagnostic;
};

// Reads trials.jsonl. A malformed line that is not the last one throws
// MalformedRecord; a malformed final line is reported in the result.
TrialLog read_trial_log(const std::filesystem::path& path);

// Serialized form of best_features.json.
nlohmann::json best_features_json(const optimizer::TrialRecord& best,
                                  const optimizer::SearchSpace& space);

struct BestFeatures {
  std::string instruction;
  FeatureSet features;
};
BestFeatures read_best_features(const std::filesystem::path& path);

// Owns one run directory for the lifetime of the object via a `.lock` file.
class RunStore {
 public:
  static constexpr const char* kManifest = "manifest.json";
  static constexpr const char* kTrials = "trials.jsonl";
  static constexpr const char* kSearchSpace = "search_space.json";
  static constexpr const char* kBestFeatures = "best_features.json";
  static constexpr const char* kReport = "report.md";
  static constexpr const char* kUsage = "usage.json";
  static constexpr const char* kCost = "cost.json";
  static constexpr const char* kLock = ".lock";

  // Creates the directory if needed and takes the lock; throws RunLocked.
  explicit RunStore(std::filesystem::path dir);
  ~RunStore();
  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const char* name) const { return dir_ / name; }
  bool has_trials() const;

  // Appends one line and flushes it to disk before returning.
  void append_trial(const optimizer::TrialRecord& trial);
  // Loads prior trials, dropping (and rewriting away) a truncated tail.
  TrialLog load_trials();

  void write_json(const char* name, const nlohmann::json& doc) const;
  std::optional<nlohmann::json> read_json(const char* name) const;
  void write_text(const char* name, const std::string& text) const;

 private:
  std::filesystem::path dir_;
};

// Atomically replaces `path` (write to a sibling, then rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace featopt::io
