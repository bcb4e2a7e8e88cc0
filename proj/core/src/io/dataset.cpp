// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/io/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "featopt/errors.hpp"
#include "featopt/random.hpp"

namespace featopt::io {
namespace {

using nlohmann::json;

// Labels may be written as numbers in the source; they are names here.
std::optional<std::string> scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_boolean()) return v.dump();
  return std::nullopt;
}

void check_unique(const std::vector<LabeledExample>& records) {
  std::set<std::string> seen;
  for (const auto& r : records)
    if (!seen.insert(r.id).second) throw DuplicateId(r.id);
}

std::string line_id(std::size_t line) { return "line-" + std::to_string(line); }

}  // namespace

std::vector<LabeledExample> read_jsonl_records(std::istream& in, const RecordFields& fields) {
  std::vector<LabeledExample> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MalformedRecord(line, "record is not a JSON object");
    LabeledExample ex;
    auto text = doc.find(fields.text);
    if (text == doc.end() || !text->is_string())
      throw MalformedRecord(line, "missing string field \"" + fields.text + "\"");
    ex.text = text->get<std::string>();
    auto label = doc.find(fields.label);
    if (label != doc.end() && !label->is_null()) {
      auto s = scalar_text(*label);
      if (!s || s->empty()) throw MalformedRecord(line, "field \"" + fields.label + "\" is not a label");
      ex.label = *s;
    } else if (fields.require_label) {
      throw MalformedRecord(line, "missing field \"" + fields.label + "\"");
    }
    auto id = fields.id.empty() ? doc.end() : doc.find(fields.id);
    if (id != doc.end() && !id->is_null()) {
      auto s = scalar_text(*id);
      if (!s || s->empty()) throw MalformedRecord(line, "field \"" + fields.id + "\" is not an id");
      ex.id = *s;
    } else {
      ex.id = line_id(line);
    }
    out.push_back(std::move(ex));
  }
  check_unique(out);
  return out;
}

bool read_csv_row(std::istream& in, std::vector<std::string>& row, std::size_t& line) {
  row.clear();
  std::string raw;
  if (!std::getline(in, raw)) return false;
  ++line;
  const std::size_t start_line = line;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (;;) {
    if (!raw.empty() && raw.back() == '\r' && !quoted) raw.pop_back();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      char c = raw[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < raw.size() && raw[i + 1] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
      } else if (c == '"') {
        if (!field.empty() || was_quoted)
          throw MalformedRecord(line, "stray quote inside an unquoted field");
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else {
        if (was_quoted) throw MalformedRecord(line, "text after a closing quote");
        field += c;
      }
    }
    if (!quoted) break;
    if (!std::getline(in, raw))
      throw MalformedRecord(start_line, "unterminated quoted field");
    ++line;
    field += '\n';
  }
  row.push_back(std::move(field));
  return true;
}

std::vector<LabeledExample> read_csv_records(std::istream& in, const RecordFields& fields) {
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!read_csv_row(in, header, line)) return {};
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto text_col = column(fields.text);
  if (!text_col) throw MalformedRecord(1, "header has no \"" + fields.text + "\" column");
  const auto label_col = column(fields.label);
  if (!label_col && fields.require_label)
    throw MalformedRecord(1, "header has no \"" + fields.label + "\" column");
  const auto id_col = fields.id.empty() ? std::nullopt : column(fields.id);

  std::vector<LabeledExample> out;
  std::vector<std::string> row;
  for (;;) {
    const std::size_t first_line = line + 1;
    if (!read_csv_row(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size())
      throw MalformedRecord(first_line, "expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(row.size()));
    LabeledExample ex;
    ex.text = row[*text_col];
    if (label_col) ex.label = row[*label_col];
    if (ex.label.empty() && fields.require_label)
      throw MalformedRecord(first_line, "empty label");
    ex.id = id_col && !row[*id_col].empty() ? row[*id_col] : line_id(first_line);
    out.push_back(std::move(ex));
  }
  check_unique(out);
  return out;
}

std::vector<LabeledExample> read_records(const std::filesystem::path& path,
                                         DatasetFormat format, const RecordFields& fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dataset " + path.string());
  return format == DatasetFormat::kJsonl ? read_jsonl_records(in, fields)
                                         : read_csv_records(in, fields);
}

DatasetSplits make_splits(const std::vector<LabeledExample>& records, const SplitSpec& spec,
                          std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label].push_back(i);
  if (by_class.size() < 2)
    throw DegenerateLabels("dataset needs at least two classes, found " +
                           std::to_string(by_class.size()));

  DatasetSplits splits;
  std::map<std::string, std::vector<std::size_t>> rest;
  for (auto& [label, members] : by_class) {
    splits.class_names.push_back(label);
    if (members.size() < spec.train_per_class)
      throw ClassQuotaUnmet(label, members.size(), spec.train_per_class);
    Rng rng(derive_seed(seed, "train:" + label));
    shuffle(members, rng);
    for (std::size_t j = 0; j < spec.train_per_class; ++j)
      splits.train.push_back(records[members[j]]);
    rest[label].assign(members.begin() + static_cast<std::ptrdiff_t>(spec.train_per_class),
                       members.end());
  }

  std::size_t available = 0;
  for (const auto& [_, m] : rest) available += m.size();
  std::size_t target = spec.annotation_size;
  if (available < target) {
    spdlog::warn("only {} rows remain after the train split; annotation split shrinks from {}",
                 available, target);
    target = available;
  }

  // Largest-remainder allotment proportional to the full class distribution,
  // capped by what each class has left.
  std::map<std::string, std::size_t> quota;
  std::vector<std::pair<double, std::string>> remainders;
  std::size_t assigned = 0;
  for (const auto& [label, members] : by_class) {
    const double exact = static_cast<double>(target) * static_cast<double>(members.size()) /
                         static_cast<double>(records.size());
    auto q = std::min(static_cast<std::size_t>(std::floor(exact)), rest[label].size());
    quota[label] = q;
    assigned += q;
    remainders.emplace_back(exact - std::floor(exact), label);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  while (assigned < target) {
    bool progressed = false;
    for (const auto& [_, label] : remainders) {
      if (assigned == target) break;
      if (quota[label] < rest[label].size()) {
        ++quota[label];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }

  std::vector<std::size_t> annotation;
  for (const auto& [label, members] : rest)
    annotation.insert(annotation.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(quota[label]));
  Rng rng(derive_seed(seed, "annotation"));
  shuffle(annotation, rng);
  for (auto i : annotation) splits.annotation.push_back(records[i]);
  validate_splits(splits);
  return splits;
}

DatasetSplits ingest(const DatasetConfig& config, std::uint64_t seed) {
  if (config.path.empty()) throw ConfigError("dataset.path is not set");
  RecordFields fields{config.text_field, config.label_field, config.id_field, true};
  auto records = read_records(config.path, config.format, fields);
  return make_splits(records, {config.train_per_class, config.annotation_size}, seed);
}

}  // namespace featopt::io
