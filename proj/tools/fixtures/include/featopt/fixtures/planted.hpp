// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/types.hpp"

// Synthetic support-ticket corpus with six planted Boolean properties. The
// label (routine / elevated / urgent) counts how many of mentions_deadline
// and mentions_outage hold; the other four are noise. A scripted transcript
// answers every agent from the hidden generator, so the whole pipeline runs
// offline and deterministically.
namespace featopt::fixtures {

inline constexpr std::size_t kPlantedCount = 6;
using HiddenRow = std::array<bool, kPlantedCount>;

// Indices into HiddenRow / planted_schema().
inline constexpr std::size_t kDeadline = 0;
inline constexpr std::size_t kOutage = 1;

struct CorpusOptions {
  std::size_t n_records = 700;
  std::uint64_t seed = 7;
  double label_noise = 0.0;  // probability a label is replaced by another class
};

struct PlantedCorpus {
  std::vector<LabeledExample> records;
  std::vector<HiddenRow> hidden;          // per record
  std::vector<std::string> true_labels;   // before noise
  std::vector<std::string> class_names;   // sorted
};

PlantedCorpus make_planted_corpus(const CorpusOptions& options = {});

// All six planted features.
FeatureSet planted_schema();
// The four noise features only.
FeatureSet weak_schema();
// planted_schema() plus "priority_label", a categorical echo of the label.
FeatureSet leaky_schema();

// Instruction phrases the scripted proposer keys on.
const std::string& refined_phrase();  // -> planted_schema()
const std::string& leaky_phrase();    // -> leaky_schema()

struct TranscriptOptions {
  int criterion_score = 9;      // every interpretability criterion, 0-10
  bool scorer_flags_leak = false;  // whether the scripted scorer spots the echo
  std::size_t k_reflect = 4;
};

// Rules: extractor answers per text, proposer schemas by instruction phrase
// (default: weak_schema()), fixed scorer, feedback and refiner replies.
nlohmann::json scripted_transcript(const PlantedCorpus& corpus,
                                   const TranscriptOptions& options = {});

// The instructions the scripted refiner proposes; each contains refined_phrase().
std::vector<std::string> refined_instructions(std::size_t k);

std::string to_jsonl(const std::vector<LabeledExample>& records);

}  // namespace featopt::fixtures
