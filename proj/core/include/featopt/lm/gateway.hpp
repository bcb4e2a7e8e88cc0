// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "featopt/lm/backend.hpp"
#include "featopt/lm/shape.hpp"

namespace featopt::lm {

struct GatewayOptions {
  int max_retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds retry_base_delay{500};
  std::chrono::milliseconds retry_max_delay{30'000};
  // Keep full request messages in the audit log. Digests are always kept.
  bool retain_audit_messages = true;
};

std::string request_digest(const std::vector<ChatMessage>& messages);

// One attempted backend call, successful or not.
struct AuditEntry {
  std::uint64_t sequence = 0;  // completion order
  CallTag tag;
  int attempt = 0;           // transport retry index
  int structured_round = 0;  // reprompt index within complete_structured
  std::vector<ChatMessage> messages;  // empty unless retained
  std::string request_digest;
  GenerationParams params;
  std::string response;
  TokenUsage usage;
  std::string status;  // "ok" or the error text
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
};

// Token totals keyed by (agent, candidate).
class UsageLedger {
 public:
  using Key = std::pair<ModuleRole, std::string>;

  void add(const CallTag& tag, const TokenUsage& usage);

  const std::map<Key, TokenUsage>& entries() const { return totals_; }
  TokenUsage total() const;
  TokenUsage for_role(ModuleRole role) const;
  TokenUsage for_candidate(const std::string& candidate) const;
  bool empty() const { return totals_.empty(); }

  static UsageLedger from_audit(const std::vector<AuditEntry>& entries);
  nlohmann::json to_json() const;
  static UsageLedger from_json(const nlohmann::json& doc);

 private:
  std::map<Key, TokenUsage> totals_;
};

// Append-only, internally synchronized record of every backend attempt.
class AuditLog {
 public:
  explicit AuditLog(bool retain_messages = true) : retain_messages_(retain_messages) {}

  // Assigns the sequence number and the request digest.
  void append(AuditEntry entry);
  std::vector<AuditEntry> entries() const;
  std::size_t size() const;
  // Running token totals over every appended entry.
  UsageLedger usage() const;

  // Entries sorted by (candidate, role, item, structured round, attempt) so
  // the ordering is independent of thread scheduling. Timestamps are omitted
  // unless requested.
  nlohmann::json canonical_json(bool include_timestamps = false) const;

 private:
  bool retain_messages_;
  mutable std::mutex mu_;
  std::vector<AuditEntry> entries_;
  UsageLedger usage_;
};

struct StructuredCompletion {
  nlohmann::json value;
  TokenUsage usage;  // summed over every reprompt round
  int calls = 0;
};

// Thread-safe front door to a ChatBackend: bounded parallelism, retries with
// exponential backoff, structured-output validation, and auditing.
class LmGateway {
 public:
  LmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options);

  Completion complete(const std::vector<ChatMessage>& messages,
                      const GenerationParams& params, const CallTag& tag);

  // Validates the first JSON object in the reply against `shape`; on failure
  // reprompts with the errors appended, at most `parse_retries` more times.
  StructuredCompletion complete_structured(std::vector<ChatMessage> messages,
                                           const GenerationParams& params,
                                           const Shape& shape, int parse_retries,
                                           const CallTag& tag);

  UsageLedger usage_ledger() const;
  const AuditLog& audit_log() const { return audit_; }
  std::string model_id() const { return backend_->model_id(); }
  int max_in_flight() const { return options_.max_in_flight; }
  int peak_in_flight() const;

 private:
  Completion complete_round(const std::vector<ChatMessage>& messages,
                            const GenerationParams& params, const CallTag& tag,
                            int structured_round);
  void acquire_slot();
  void release_slot();

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;
  AuditLog audit_;
  mutable std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
  int peak_in_flight_ = 0;
};

}  // namespace featopt::lm
