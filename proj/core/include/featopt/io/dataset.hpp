// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "featopt/io/config.hpp"
#include "featopt/types.hpp"

namespace featopt::io {

struct RecordFields {
  std::string text = "text";
  std::string label = "label";
  std::string id = "id";  // empty: always assign ids
  bool require_label = true;
};

// One record per non-blank line (JSONL) or row after the header (CSV).
// Missing ids become "line-<n>". Throws MalformedRecord with the 1-based
// line number, or DuplicateId.
std::vector<LabeledExample> read_jsonl_records(std::istream& in, const RecordFields& fields);
std::vector<LabeledExample> read_csv_records(std::istream& in, const RecordFields& fields);
std::vector<LabeledExample> read_records(const std::filesystem::path& path,
                                         DatasetFormat format, const RecordFields& fields);

// RFC 4180 field splitting for one logical record; quoted fields may span
// lines, so `in` is read as needed. Returns false at end of input.
bool read_csv_row(std::istream& in, std::vector<std::string>& row, std::size_t& line);

struct SplitSpec {
  std::size_t train_per_class = 16;
  std::size_t annotation_size = 512;
};

// Train takes train_per_class examples of every class; annotation takes
// annotation_size of the rest, allotted to classes in proportion to the
// full data (largest remainder). Deterministic in `seed`; the splits are
// disjoint. Throws DegenerateLabels for fewer than two classes and
// ClassQuotaUnmet when a class cannot fill its train quota. Shrinks the
// annotation split, with a warning, when too few rows remain.
DatasetSplits make_splits(const std::vector<LabeledExample>& records, const SplitSpec& spec,
                          std::uint64_t seed);

DatasetSplits ingest(const DatasetConfig& config, std::uint64_t seed);

}  // namespace featopt::io
