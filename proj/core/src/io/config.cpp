// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/io/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "featopt/errors.hpp"

namespace featopt::io {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
      return false;
  return key.find("..") == std::string::npos;
}

std::string interpolate(const std::string& s, const EnvLookup& env, std::size_t line) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto open = s.find("${", pos);
    if (open == std::string::npos) {
      out.append(s, pos);
      break;
    }
    auto close = s.find('}', open);
    if (close == std::string::npos)
      throw ConfigError(fmt::format("line {}: unterminated ${{...}}", line));
    out.append(s, pos, open - pos);
    const std::string name = s.substr(open + 2, close - open - 2);
    auto value = env ? env(name) : std::nullopt;
    if (!value)
      throw ConfigError(fmt::format("line {}: environment variable {} is not set", line, name));
    out += *value;
    pos = close + 1;
  }
  return out;
}

// Parses a quoted string starting at s[0]; returns the value and sets
// `consumed` to the index after the closing quote.
std::string parse_quoted(const std::string& s, std::size_t& consumed, std::size_t line) {
  const char quote = s[0];
  std::string out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == quote) {
      consumed = i + 1;
      return out;
    }
    if (c == '\\' && quote == '"') {
      if (++i >= s.size()) break;
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw ConfigError(fmt::format("line {}: unknown escape \\{}", line, s[i]));
      }
      continue;
    }
    out += c;
  }
  throw ConfigError(fmt::format("line {}: unterminated string", line));
}

ConfigValue parse_scalar(const std::string& raw, std::size_t line) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  std::string digits;
  for (char c : raw)
    if (c != '_') digits += c;
  std::int64_t i = 0;
  auto [ip, iec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (iec == std::errc() && ip == digits.data() + digits.size()) return i;
  double d = 0;
  auto [dp, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (dec == std::errc() && dp == digits.data() + digits.size() && std::isfinite(d)) return d;
  throw ConfigError(fmt::format("line {}: cannot parse value '{}'", line, raw));
}

// Typed, tracked access so unknown keys can be reported.
class Reader {
 public:
  explicit Reader(const ConfigTable& t) : table_(t) {}

  template <typename T>
  std::optional<T> get(const std::string& key);

  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& [k, _] : table_)
      if (!used_.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string list;
      for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError("unknown configuration keys: " + list);
    }
  }

 private:
  const ConfigTable& table_;
  std::set<std::string> used_;
};

template <>
std::optional<std::string> Reader::get<std::string>(const std::string& key) {
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  used_.insert(key);
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError(key + " must be a string");
}

template <>
std::optional<bool> Reader::get<bool>(const std::string& key) {
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  used_.insert(key);
  if (auto* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError(key + " must be true or false");
}

template <>
std::optional<double> Reader::get<double>(const std::string& key) {
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  used_.insert(key);
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw ConfigError(key + " must be a number");
}

template <>
std::optional<std::int64_t> Reader::get<std::int64_t>(const std::string& key) {
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  used_.insert(key);
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw ConfigError(key + " must be an integer");
}

template <typename T>
void read_into(Reader& r, const std::string& key, T& out) {
  if (auto v = r.get<T>(key)) out = *v;
}

void read_count(Reader& r, const std::string& key, std::size_t& out) {
  if (auto v = r.get<std::int64_t>(key)) {
    if (*v < 1) throw ConfigError(key + " must be >= 1");
    out = static_cast<std::size_t>(*v);
  }
}

void read_generation(Reader& r, const std::string& role, lm::GenerationParams& p) {
  read_into(r, "generation." + role + ".temperature", p.temperature);
  read_into(r, "generation." + role + ".top_p", p.top_p);
  if (auto v = r.get<std::int64_t>("generation." + role + ".max_tokens")) {
    if (*v < 1) throw ConfigError("generation." + role + ".max_tokens must be >= 1");
    p.max_tokens = static_cast<int>(*v);
  }
}

nlohmann::json generation_json(const lm::GenerationParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}};
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

ConfigTable parse_config_text(const std::string& text, const EnvLookup& env) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') {
      auto close = s.find(']');
      if (close == std::string::npos)
        throw ConfigError(fmt::format("line {}: unterminated section header", line));
      auto rest = trim(s.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw ConfigError(fmt::format("line {}: text after section header", line));
      section = trim(s.substr(1, close - 1));
      if (!section.empty() && !valid_key(section))
        throw ConfigError(fmt::format("line {}: bad section name '{}'", line, section));
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected key = value", line));
    std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(fmt::format("line {}: bad key '{}'", line, key));
    if (!section.empty()) key = section + "." + key;
    std::string rhs = trim(s.substr(eq + 1));
    if (rhs.empty()) throw ConfigError(fmt::format("line {}: missing value for {}", line, key));

    ConfigValue value;
    std::string tail;
    if (rhs[0] == '"' || rhs[0] == '\'') {
      std::size_t consumed = 0;
      std::string str = parse_quoted(rhs, consumed, line);
      tail = trim(rhs.substr(consumed));
      value = rhs[0] == '"' ? interpolate(str, env, line) : str;
    } else {
      auto hash = rhs.find('#');
      tail = hash == std::string::npos ? "" : rhs.substr(hash);
      value = parse_scalar(trim(rhs.substr(0, hash)), line);
    }
    if (!tail.empty() && tail[0] != '#')
      throw ConfigError(fmt::format("line {}: unexpected text after value", line));
    if (!table.emplace(key, std::move(value)).second)
      throw ConfigError(fmt::format("line {}: duplicate key {}", line, key));
  }
  return table;
}

std::string_view to_string(DatasetFormat format) {
  return format == DatasetFormat::kJsonl ? "jsonl" : "csv";
}

RunConfig RunConfig::from_table(const ConfigTable& table, const fs::path& base_dir) {
  RunConfig c;
  auto& opt = c.optimizer;
  // Only the proposer samples; the rest decode greedily.
  opt.agents.proposer = {0.75, 0.95, 2048, std::nullopt};

  Reader r(table);
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    if (path.empty()) return path;
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  if (auto v = r.get<std::string>("dataset.path")) c.dataset.path = resolve(*v);
  if (auto v = r.get<std::string>("dataset.format")) {
    if (*v == "jsonl") {
      c.dataset.format = DatasetFormat::kJsonl;
    } else if (*v == "csv") {
      c.dataset.format = DatasetFormat::kCsv;
    } else {
      throw ConfigError("dataset.format must be \"jsonl\" or \"csv\"");
    }
  }
  read_into(r, "dataset.text_field", c.dataset.text_field);
  read_into(r, "dataset.label_field", c.dataset.label_field);
  read_into(r, "dataset.id_field", c.dataset.id_field);
  read_count(r, "dataset.train_per_class", c.dataset.train_per_class);
  read_count(r, "dataset.annotation_size", c.dataset.annotation_size);

  read_into(r, "endpoint.base_url", c.endpoint.base_url);
  read_into(r, "endpoint.model", c.endpoint.model_id);
  read_into(r, "endpoint.api_key_env", c.api_key_env);
  if (auto v = r.get<std::string>("endpoint.api_key")) c.endpoint.api_key = *v;
  if (auto v = r.get<double>("endpoint.timeout_seconds")) {
    if (!(*v > 0)) throw ConfigError("endpoint.timeout_seconds must be > 0");
    c.endpoint.request_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(*v * 1000));
  }
  if (auto v = r.get<std::int64_t>("endpoint.max_retries")) {
    if (*v < 0) throw ConfigError("endpoint.max_retries must be >= 0");
    c.endpoint.max_retries = static_cast<int>(*v);
  }
  if (auto v = r.get<std::int64_t>("endpoint.max_in_flight")) {
    if (*v < 1) throw ConfigError("endpoint.max_in_flight must be >= 1");
    c.endpoint.max_in_flight = static_cast<int>(*v);
  }

  if (auto v = r.get<std::string>("run.dir")) c.run_dir = resolve(*v);

  if (auto v = r.get<std::int64_t>("search.seed")) {
    if (*v < 0) throw ConfigError("search.seed must be >= 0");
    opt.seed = static_cast<std::uint64_t>(*v);
  }
  read_count(r, "search.n_example_sets", opt.n_example_sets);
  read_count(r, "search.example_set_size", opt.example_set_size);
  read_into(r, "search.stratified_example_sets", opt.stratified_example_sets);
  if (auto v = r.get<std::int64_t>("search.n_feedback_rounds")) {
    if (*v < 0) throw ConfigError("search.n_feedback_rounds must be >= 0");
    opt.n_feedback_rounds = static_cast<std::size_t>(*v);
  }
  read_count(r, "search.k_reflect", opt.k_reflect);
  if (auto v = r.get<std::int64_t>("search.n_iter")) {
    if (*v < 1) throw ConfigError("search.n_iter must be >= 1");
    opt.n_iter = static_cast<std::size_t>(*v);
  }
  read_into(r, "search.lambda", opt.lambda);
  if (auto v = r.get<std::string>("search.mode")) {
    auto mode = agents::proposer_mode_from_string(*v);
    if (!mode) throw ConfigError("search.mode must be \"reflective\" or \"scalar\"");
    opt.mode = *mode;
  }
  read_into(r, "search.seed_instruction", opt.seed_instruction);
  if (auto v = r.get<std::int64_t>("search.refinement_example_set")) {
    if (*v < 0) throw ConfigError("search.refinement_example_set must be >= 0");
    opt.refinement_example_set = static_cast<std::size_t>(*v);
  }

  read_into(r, "tpe.gamma", opt.tpe.gamma);
  read_into(r, "tpe.prior_weight", opt.tpe.prior_weight);
  if (auto v = r.get<std::int64_t>("tpe.n_startup")) {
    if (*v < 0) throw ConfigError("tpe.n_startup must be >= 0");
    opt.tpe.n_startup = static_cast<std::size_t>(*v);
  }
  read_count(r, "tpe.enumeration_limit", opt.tpe.enumeration_limit);
  read_count(r, "tpe.n_candidates", opt.tpe.n_candidates);

  read_count(r, "evaluation.k_folds", opt.evaluation.k_folds);
  read_into(r, "evaluation.l2", opt.evaluation.l2);
  read_into(r, "evaluation.tol", opt.evaluation.tol);
  if (auto v = r.get<std::int64_t>("evaluation.max_iter")) {
    if (*v < 1) throw ConfigError("evaluation.max_iter must be >= 1");
    opt.evaluation.max_iter = static_cast<int>(*v);
  }
  read_into(r, "evaluation.leakage_mi_threshold", opt.evaluation.leakage.normalized_mi_threshold);
  read_count(r, "evaluation.leakage_min_rows", opt.evaluation.leakage.min_rows_for_mi);
  read_count(r, "evaluation.mi_bins", opt.evaluation.leakage.max_bins);

  if (auto v = r.get<std::int64_t>("agents.parse_retries")) {
    if (*v < 0) throw ConfigError("agents.parse_retries must be >= 0");
    opt.agents.parse_retries = static_cast<int>(*v);
  }
  read_count(r, "agents.context_char_budget", opt.agents.context_char_budget);
  read_count(r, "agents.min_features", opt.agents.min_features);
  read_count(r, "agents.max_features", opt.agents.max_features);
  read_generation(r, "proposer", opt.agents.proposer);
  read_generation(r, "extractor", opt.agents.extractor);
  read_generation(r, "scorer", opt.agents.scorer);
  read_generation(r, "feedback", opt.agents.feedback);
  read_generation(r, "reflective", opt.agents.reflective);

  read_into(r, "cost.m_fp", c.cost_weights.m_fp);
  read_into(r, "cost.m_e", c.cost_weights.m_e);
  read_into(r, "cost.m_s", c.cost_weights.m_s);

  r.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ConfigTable table;
  try {
    table = parse_config_text(buf.str(), env);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = from_table(table, path.parent_path());
  if (!c.endpoint.api_key && !c.api_key_env.empty()) {
    if (auto key = env ? env(c.api_key_env) : std::nullopt) c.endpoint.api_key = *key;
  }
  return c;
}

void RunConfig::validate() const {
  optimizer.validate();
  if (!dataset.path.empty() && !fs::exists(dataset.path))
    throw ConfigError("dataset file does not exist: " + dataset.path.string());
  if (dataset.text_field.empty() || dataset.label_field.empty())
    throw ConfigError("dataset field names must not be empty");
  for (double w : {cost_weights.m_fp, cost_weights.m_e, cost_weights.m_s})
    if (!(w > 0.0)) throw ConfigError("cost model weights must be > 0");
}

nlohmann::json RunConfig::to_json() const {
  const auto& o = optimizer;
  nlohmann::json doc;
  doc["dataset"] = {{"path", dataset.path.string()},
                    {"format", std::string(to_string(dataset.format))},
                    {"text_field", dataset.text_field},
                    {"label_field", dataset.label_field},
                    {"id_field", dataset.id_field},
                    {"train_per_class", dataset.train_per_class},
                    {"annotation_size", dataset.annotation_size}};
  doc["endpoint"] = {{"base_url", endpoint.base_url},
                     {"model", endpoint.model_id},
                     {"api_key_env", api_key_env},
                     {"timeout_seconds", endpoint.request_timeout.count() / 1000.0},
                     {"max_retries", endpoint.max_retries},
                     {"max_in_flight", endpoint.max_in_flight}};
  doc["search"] = {{"seed", o.seed},
                   {"n_example_sets", o.n_example_sets},
                   {"example_set_size", o.example_set_size},
                   {"stratified_example_sets", o.stratified_example_sets},
                   {"n_feedback_rounds", o.n_feedback_rounds},
                   {"k_reflect", o.k_reflect},
                   {"n_iter", o.effective_n_iter()},
                   {"n_iter_from_heuristic", !o.n_iter.has_value()},
                   {"lambda", o.lambda},
                   {"mode", std::string(agents::to_string(o.mode))},
                   {"seed_instruction", o.effective_seed_instruction()},
                   {"refinement_example_set", o.refinement_example_set}};
  doc["tpe"] = {{"gamma", o.tpe.gamma},
                {"prior_weight", o.tpe.prior_weight},
                {"n_startup", o.tpe.n_startup},
                {"enumeration_limit", o.tpe.enumeration_limit},
                {"n_candidates", o.tpe.n_candidates}};
  doc["evaluation"] = {{"k_folds", o.evaluation.k_folds},
                       {"l2", o.evaluation.l2},
                       {"tol", o.evaluation.tol},
                       {"max_iter", o.evaluation.max_iter},
                       {"leakage_mi_threshold", o.evaluation.leakage.normalized_mi_threshold},
                       {"leakage_min_rows", o.evaluation.leakage.min_rows_for_mi},
                       {"mi_bins", o.evaluation.leakage.max_bins}};
  doc["agents"] = {{"parse_retries", o.agents.parse_retries},
                   {"context_char_budget", o.agents.context_char_budget},
                   {"min_features", o.agents.min_features},
                   {"max_features", o.agents.max_features}};
  doc["generation"] = {{"proposer", generation_json(o.agents.proposer)},
                       {"extractor", generation_json(o.agents.extractor)},
                       {"scorer", generation_json(o.agents.scorer)},
                       {"feedback", generation_json(o.agents.feedback)},
                       {"reflective", generation_json(o.agents.reflective)}};
  doc["cost"] = {{"m_fp", cost_weights.m_fp}, {"m_e", cost_weights.m_e}, {"m_s", cost_weights.m_s}};
  doc["run_dir"] = run_dir.string();
  return doc;
}

}  // namespace featopt::io
