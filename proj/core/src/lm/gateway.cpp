// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/lm/gateway.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "featopt/random.hpp"

namespace featopt::lm {

using json = nlohmann::json;

void AuditLog::append(AuditEntry entry) {
  if (entry.request_digest.empty()) entry.request_digest = request_digest(entry.messages);
  if (!retain_messages_) {
    entry.messages.clear();
    entry.messages.shrink_to_fit();
  }
  std::lock_guard lock(mu_);
  entry.sequence = entries_.size();
  usage_.add(entry.tag, entry.usage);
  entries_.push_back(std::move(entry));
}

UsageLedger AuditLog::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string request_digest(const std::vector<ChatMessage>& messages) {
  std::uint64_t h = 0;
  for (const auto& m : messages) {
    h = derive_seed(h, m.role);
    h = derive_seed(h, m.content);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::int64_t millis_since_epoch(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch())
      .count();
}

}  // namespace

json AuditLog::canonical_json(bool include_timestamps) const {
  auto sorted = entries();
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AuditEntry& a, const AuditEntry& b) {
                     return std::tie(a.tag.candidate, a.tag.role, a.tag.item,
                                     a.structured_round, a.attempt) <
                            std::tie(b.tag.candidate, b.tag.role, b.tag.item,
                                     b.structured_round, b.attempt);
                   });
  json out = json::array();
  for (const auto& e : sorted) {
    json row = json::object();
    row["candidate"] = e.tag.candidate;
    row["role"] = std::string(to_string(e.tag.role));
    row["item"] = e.tag.item;
    row["structured_round"] = e.structured_round;
    row["attempt"] = e.attempt;
    row["request_digest"] = e.request_digest;
    row["response"] = e.response;
    row["prompt_tokens"] = e.usage.prompt_tokens;
    row["completion_tokens"] = e.usage.completion_tokens;
    row["status"] = e.status;
    if (include_timestamps) {
      row["started_ms"] = millis_since_epoch(e.started);
      row["finished_ms"] = millis_since_epoch(e.finished);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void UsageLedger::add(const CallTag& tag, const TokenUsage& usage) {
  totals_[{tag.role, tag.candidate}] += usage;
}

TokenUsage UsageLedger::total() const {
  TokenUsage sum;
  for (const auto& [key, usage] : totals_) sum += usage;
  return sum;
}

TokenUsage UsageLedger::for_role(ModuleRole role) const {
  TokenUsage sum;
  for (const auto& [key, usage] : totals_) {
    if (key.first == role) sum += usage;
  }
  return sum;
}

TokenUsage UsageLedger::for_candidate(const std::string& candidate) const {
  TokenUsage sum;
  for (const auto& [key, usage] : totals_) {
    if (key.second == candidate) sum += usage;
  }
  return sum;
}

UsageLedger UsageLedger::from_audit(const std::vector<AuditEntry>& entries) {
  UsageLedger ledger;
  for (const auto& e : entries) ledger.add(e.tag, e.usage);
  return ledger;
}

json UsageLedger::to_json() const {
  json out = json::array();
  for (const auto& [key, usage] : totals_) {
    out.push_back({{"role", std::string(lm::to_string(key.first))},
                   {"candidate", key.second},
                   {"prompt_tokens", usage.prompt_tokens},
                   {"completion_tokens", usage.completion_tokens},
                   {"model_id", usage.model_id}});
  }
  return out;
}

UsageLedger UsageLedger::from_json(const json& doc) {
  UsageLedger ledger;
  for (const auto& row : doc) {
    auto role = module_role_from_string(row.at("role").get<std::string>());
    if (!role) throw Error("unknown module role in usage ledger");
    TokenUsage usage{row.at("prompt_tokens").get<std::int64_t>(),
                     row.at("completion_tokens").get<std::int64_t>(),
                     row.value("model_id", std::string())};
    ledger.add({*role, row.at("candidate").get<std::string>(), 0}, usage);
  }
  return ledger;
}

LmGateway::LmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options), audit_(options.retain_audit_messages) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (options_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (options_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

void LmGateway::acquire_slot() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [this] { return in_flight_ < options_.max_in_flight; });
  ++in_flight_;
  peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
}

void LmGateway::release_slot() {
  {
    std::lock_guard lock(slot_mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

int LmGateway::peak_in_flight() const {
  std::lock_guard lock(slot_mu_);
  return peak_in_flight_;
}

UsageLedger LmGateway::usage_ledger() const {
  return audit_.usage();
}

Completion LmGateway::complete(const std::vector<ChatMessage>& messages,
                               const GenerationParams& params, const CallTag& tag) {
  return complete_round(messages, params, tag, 0);
}

Completion LmGateway::complete_round(const std::vector<ChatMessage>& messages,
                                     const GenerationParams& params,
                                     const CallTag& tag, int structured_round) {
  if (messages.empty()) throw PreconditionFailed("messages must not be empty");
  validate(params);
  if (messages.front().role != "system" && messages.front().role != "user") {
    throw PreconditionFailed("first message must have the system or user role");
  }
  for (int attempt = 0;; ++attempt) {
    AuditEntry entry;
    entry.tag = tag;
    entry.attempt = attempt;
    entry.structured_round = structured_round;
    entry.messages = messages;
    entry.params = params;
    entry.usage.model_id = backend_->model_id();

    std::exception_ptr failure;
    bool retryable = false;
    acquire_slot();
    entry.started = std::chrono::system_clock::now();
    try {
      Completion c = backend_->send(messages, params);
      entry.response = c.text;
      entry.usage = c.usage;
      entry.status = "ok";
    } catch (const TransportError& e) {
      failure = std::current_exception();
      retryable = e.transient();
      entry.status = e.what();
    } catch (const EndpointRejected& e) {
      failure = std::current_exception();
      retryable = e.retryable();
      entry.status = e.what();
    } catch (const std::exception& e) {
      failure = std::current_exception();
      entry.status = e.what();
    }
    entry.finished = std::chrono::system_clock::now();
    release_slot();
    Completion result{entry.response, entry.usage};
    audit_.append(std::move(entry));

    if (!failure) return result;
    if (!retryable || attempt >= options_.max_retries) {
      std::rethrow_exception(failure);
    }
    auto delay = options_.retry_base_delay * (1LL << std::min(attempt, 20));
    std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(
        delay, options_.retry_max_delay));
  }
}

StructuredCompletion LmGateway::complete_structured(
    std::vector<ChatMessage> messages, const GenerationParams& params,
    const Shape& shape, int parse_retries, const CallTag& tag) {
  StructuredCompletion out;
  out.usage.model_id = backend_->model_id();
  std::vector<std::string> errors;
  for (int round = 0; round <= parse_retries; ++round) {
    Completion c = complete_round(messages, params, tag, round);
    out.usage += c.usage;
    ++out.calls;
    auto parsed = extract_first_json_object(c.text);
    errors = parsed ? shape.validate(*parsed)
                    : std::vector<std::string>{"no JSON object found in the reply"};
    if (errors.empty()) {
      out.value = std::move(*parsed);
      return out;
    }
    std::string correction =
        "Your previous reply did not satisfy the required JSON schema:\n";
    for (const auto& e : errors) correction += "- " + e + "\n";
    correction += "Reply again with a single corrected JSON object.";
    messages.push_back({"assistant", c.text});
    messages.push_back({"user", std::move(correction)});
  }
  spdlog::debug("structured output for {} failed after {} rounds",
                to_string(tag.role), out.calls);
  throw SchemaViolation(std::move(errors));
}

}  // namespace featopt::lm
