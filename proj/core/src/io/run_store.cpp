// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/io/run_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "featopt/schema.hpp"

namespace featopt::io {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to " + path.string() + " failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot write " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, contents, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

TrialLog read_trial_log(const fs::path& path) {
  TrialLog log;
  if (!fs::exists(path)) return log;
  const std::string data = slurp(path);
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    const bool last = nl == std::string::npos;
    std::string raw = data.substr(pos, last ? std::string::npos : nl - pos);
    pos = last ? data.size() : nl + 1;
    ++line;
    if (raw.empty()) continue;
    try {
      if (last) throw Error("line has no terminating newline");
      auto trial = optimizer::TrialRecord::from_json(json::parse(raw));
      if (trial.index != log.trials.size())
        throw Error("expected trial index " + std::to_string(log.trials.size()));
      log.trials.push_back(std::move(trial));
    } catch (const std::exception& e) {
      if (pos < data.size()) throw MalformedRecord(line, e.what());
      log.truncated_tail = true;
      log.diagnostic = path.string() + ": line " + std::to_string(line) +
                       " is truncated or corrupt (" + e.what() + ")";
    }
  }
  return log;
}

json best_features_json(const optimizer::TrialRecord& best,
                        const optimizer::SearchSpace& space) {
  if (!best.features) throw PreconditionFailed("best trial has no features");
  return {{"trial_index", best.index},
          {"instruction_id", best.candidate.instruction_id},
          {"example_set_id", best.candidate.example_set_id},
          {"instruction", space.instructions.at(best.candidate.instruction_id).text},
          {"combined_score", best.objective()},
          {"f1_score", best.f1_score},
          {"interpretability_score", best.interpretability_score},
          {"features", to_json(*best.features)}};
}

BestFeatures read_best_features(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  BestFeatures out;
  if (doc.is_object() && doc.contains("features")) {
    out.instruction = doc.value("instruction", "");
    out.features = validate_feature_set(doc.at("features"));
  } else {
    out.features = validate_feature_set(doc);
  }
  return out;
}

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  const fs::path lock = dir_ / kLock;
  int fd = ::open(lock.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw RunLocked("run directory " + dir_.string() +
                      " is in use by another process (delete " + lock.string() +
                      " if that process is gone)");
    throw Error("cannot create " + lock.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  write_all(fd, pid, lock);
  ::close(fd);
}

RunStore::~RunStore() {
  std::error_code ec;
  fs::remove(dir_ / kLock, ec);
}

bool RunStore::has_trials() const {
  std::error_code ec;
  return fs::exists(file(kTrials)) && fs::file_size(file(kTrials), ec) > 0;
}

void RunStore::append_trial(const optimizer::TrialRecord& trial) {
  const fs::path path = file(kTrials);
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, trial.to_json().dump() + "\n", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
}

TrialLog RunStore::load_trials() {
  auto log = read_trial_log(file(kTrials));
  if (log.truncated_tail) {
    spdlog::warn("{}; dropping it", log.diagnostic);
    std::string rewritten;
    for (const auto& t : log.trials) rewritten += t.to_json().dump() + "\n";
    write_file_atomic(file(kTrials), rewritten);
  }
  return log;
}

void RunStore::write_json(const char* name, const json& doc) const {
  write_file_atomic(file(name), doc.dump(2) + "\n");
}

std::optional<json> RunStore::read_json(const char* name) const {
  if (!fs::exists(file(name))) return std::nullopt;
  return json::parse(slurp(file(name)));
}

void RunStore::write_text(const char* name, const std::string& text) const {
  write_file_atomic(file(name), text);
}

}  // namespace featopt::io
