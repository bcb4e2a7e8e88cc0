// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/io/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "featopt/agents/coercion.hpp"
#include "featopt/agents/prompts.hpp"
#include "featopt/io/dataset.hpp"
#include "featopt/io/report.hpp"
#include "featopt/io/run_store.hpp"
#include "featopt/lm/http_backend.hpp"
#include "featopt/lm/scripted_lm.hpp"
#include "featopt/random.hpp"
#include "featopt/schema.hpp"

#ifndef FEATOPT_VERSION
#define FEATOPT_VERSION "0.0.0"
#endif

namespace featopt::io {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string ids_digest(const std::vector<LabeledExample>& examples) {
  std::uint64_t h = 0;
  for (const auto& ex : examples) h = derive_seed(h, ex.id);
  return hex64(h);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_config(const RunConfig& config) {
  json doc = config.to_json();
  doc.erase("run_dir");
  return doc;
}

json build_manifest(const RunConfig& config, const DatasetSplits& splits,
                    const lm::LmGateway& gateway, const CommonOptions& options) {
  const auto seed = config.optimizer.seed;
  json templates = json::object();
  for (const auto& id : agents::prompt_template_ids())
    templates[id] = hex64(fnv1a64(agents::prompt_template(id).text));
  json endpoint = {{"model_id", gateway.model_id()}};
  if (options.scripted_lm.empty()) {
    endpoint["backend"] = "openai-compatible";
    endpoint["base_url"] = config.endpoint.base_url;
  } else {
    endpoint["backend"] = "scripted";
    endpoint["transcript"] = options.scripted_lm.string();
  }
  return {{"tool", {{"name", "featopt"}, {"version", FEATOPT_VERSION}}},
          {"created_at", utc_now()},
          {"config", manifest_config(config)},
          {"seeds",
           {{"run", seed},
            {"example_sets", derive_seed(seed, "sets")},
            {"tpe", derive_seed(seed, "tpe")},
            {"data_summary", derive_seed(seed, "summary")}}},
          {"prompt_templates", std::move(templates)},
          {"endpoint", std::move(endpoint)},
          {"dataset",
           {{"class_names", splits.class_names},
            {"train_size", splits.train.size()},
            {"annotation_size", splits.annotation.size()},
            {"train_ids_digest", ids_digest(splits.train)},
            {"annotation_ids_digest", ids_digest(splits.annotation)}}}};
}

bool is_trial_candidate(const std::string& candidate) {
  return candidate.rfind("trial-", 0) == 0;
}

// Trial usage comes from the records, so resumed trials count once; calls
// outside trials (refinement) come from this session and any saved ledger.
lm::UsageLedger run_usage(const std::vector<optimizer::TrialRecord>& trials,
                          const lm::UsageLedger& session, const lm::UsageLedger& saved) {
  lm::UsageLedger ledger;
  for (const auto& t : trials)
    for (const auto& [role, usage] : t.usage) ledger.add({role, t.candidate_id(), 0}, usage);
  std::set<std::string> fresh;
  for (const auto& [key, usage] : session.entries()) {
    if (is_trial_candidate(key.second)) continue;
    ledger.add({key.first, key.second, 0}, usage);
    fresh.insert(key.second);
  }
  for (const auto& [key, usage] : saved.entries())
    if (!is_trial_candidate(key.second) && !fresh.count(key.second))
      ledger.add({key.first, key.second, 0}, usage);
  return ledger;
}

json cost_params_json(const cost::CostParams& p) {
  return {{"m_fp", p.m_fp}, {"m_e", p.m_e}, {"m_s", p.m_s},   {"L_phi", p.L_phi},
          {"L_t", p.L_t},   {"L_f", p.L_f}, {"N_A", p.N_A},   {"N_d", p.N_d},
          {"N_iter", p.N_iter}};
}

cost::CostParams cost_params_from_json(const json& doc) {
  cost::CostParams p;
  p.m_fp = doc.at("m_fp").get<double>();
  p.m_e = doc.at("m_e").get<double>();
  p.m_s = doc.at("m_s").get<double>();
  p.L_phi = doc.at("L_phi").get<double>();
  p.L_t = doc.at("L_t").get<double>();
  p.L_f = doc.at("L_f").get<double>();
  p.N_A = doc.at("N_A").get<double>();
  p.N_d = doc.at("N_d").get<double>();
  p.N_iter = doc.at("N_iter").get<double>();
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

DatasetFormat format_from_extension(const fs::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? DatasetFormat::kCsv : DatasetFormat::kJsonl;
}

RunConfig resolve_config(const CommonOptions& options) {
  RunConfig config = options.config.empty() ? RunConfig::from_table({})
                                            : RunConfig::load(options.config);
  if (options.seed) config.optimizer.seed = *options.seed;
  if (options.mode) config.optimizer.mode = *options.mode;
  if (!options.run_dir.empty()) config.run_dir = options.run_dir;
  config.validate();
  return config;
}

std::shared_ptr<lm::ChatBackend> make_backend(const RunConfig& config,
                                              const fs::path& scripted_lm) {
  if (!scripted_lm.empty())
    return std::make_shared<lm::ScriptedLm>(lm::ScriptedLm::load(scripted_lm));
  if (config.endpoint.base_url.empty())
    throw ConfigError("no endpoint: set endpoint.base_url or pass --scripted-lm");
  if (config.endpoint.model_id.empty()) throw ConfigError("endpoint.model is not set");
  return std::make_shared<lm::OpenAiChatBackend>(config.endpoint);
}

namespace {

lm::GatewayOptions gateway_options(const RunConfig& config) {
  lm::GatewayOptions g;
  g.max_retries = config.endpoint.max_retries;
  g.max_in_flight = config.endpoint.max_in_flight;
  g.retain_audit_messages = false;
  return g;
}

}  // namespace

int run_optimize(const CommonOptions& options, std::ostream& out) {
  const RunConfig config = resolve_config(options);
  if (config.run_dir.empty())
    throw ConfigError("no run directory: set run.dir or pass --run-dir");
  const DatasetSplits splits = ingest(config.dataset, config.optimizer.seed);
  lm::LmGateway gateway(make_backend(config, options.scripted_lm), gateway_options(config));
  const json manifest = build_manifest(config, splits, gateway, options);

  const fs::path dir = config.run_dir;
  if (fs::exists(dir / RunStore::kLock))
    throw RunLocked("run directory " + dir.string() + " is in use (" +
                    (dir / RunStore::kLock).string() + " exists)");

  std::unique_ptr<RunStore> store;
  std::optional<optimizer::ResumeState> resume;
  lm::UsageLedger saved_usage;
  if (fs::exists(dir / RunStore::kTrials)) {
    store = std::make_unique<RunStore>(dir);
    auto old = store->read_json(RunStore::kManifest);
    if (!old) throw ConfigError(dir.string() + " has trials but no manifest");
    if (old->at("config") != manifest.at("config") ||
        old->at("dataset") != manifest.at("dataset"))
      throw ConfigError(dir.string() + " holds a run with a different configuration or dataset");
    auto space = store->read_json(RunStore::kSearchSpace);
    if (!space) throw ConfigError(dir.string() + " has trials but no search space");
    auto log = store->load_trials();
    resume = optimizer::ResumeState{optimizer::SearchSpace::from_json(*space),
                                    std::move(log.trials)};
    if (auto u = store->read_json(RunStore::kUsage)) saved_usage = lm::UsageLedger::from_json(*u);
    out << fmt::format("resuming {} after {} recorded trials\n", dir.string(),
                       resume->trials.size());
  }

  auto on_trial = [&](const optimizer::TrialRecord& t, const optimizer::SearchSpace& space) {
    if (!store) {
      store = std::make_unique<RunStore>(dir);
      store->write_json(RunStore::kManifest, manifest);
    }
    store->write_json(RunStore::kSearchSpace, space.to_json());
    store->append_trial(t);
  };

  auto result = optimizer::optimize(splits, gateway, config.optimizer, on_trial,
                                    resume ? &*resume : nullptr);
  if (!store) {
    // Everything was replayed; nothing new was written.
    store = std::make_unique<RunStore>(dir);
  }
  store->write_json(RunStore::kSearchSpace, result.space.to_json());

  const auto usage = run_usage(result.trials, gateway.usage_ledger(), saved_usage);
  store->write_json(RunStore::kUsage, usage.to_json());

  const auto params = measured_cost_params(config, splits, result.space, result.trials);
  const auto estimate = cost::estimate_cost(params);
  const auto reconciliation = cost::reconcile(usage, estimate);
  store->write_json(RunStore::kCost, {{"params", cost_params_json(params)},
                                      {"estimate", estimate.to_json()},
                                      {"reconciliation", reconciliation.to_json()}});

  if (const auto* best = result.best_trial())
    store->write_json(RunStore::kBestFeatures, best_features_json(*best, result.space));

  ReportInputs report{&config, &result.space, &result.trials, result.best,
                      &usage,  estimate,      reconciliation};
  store->write_text(RunStore::kReport, render_report(report));

  out << fmt::format("{} trials written to {}\n", result.trials.size(), dir.string());
  if (const auto* best = result.best_trial()) {
    out << fmt::format("best: {} combined {:.4f} (f1 {:.4f}, interpretability {:.4f})\n",
                       best->candidate_id(), best->objective(), best->f1_score,
                       best->interpretability_score);
    return kExitOk;
  }
  out << "no trial completed successfully\n";
  return kExitNoResult;
}

int run_extract(const ExtractOptions& options, std::ostream& out) {
  const RunConfig config = resolve_config(options.common);
  const auto best = read_best_features(options.features);
  RecordFields fields{config.dataset.text_field, config.dataset.label_field,
                      config.dataset.id_field, false};
  const auto records = read_records(
      options.input, options.format.value_or(format_from_extension(options.input)), fields);
  if (records.empty()) throw ConfigError(options.input.string() + " has no records");

  lm::LmGateway gateway(make_backend(config, options.common.scripted_lm),
                        gateway_options(config));
  const auto matrix = agents::extract_all(gateway, records, best.features, {},
                                          config.optimizer.agents, "extract");

  std::string lines;
  std::size_t with_missing = 0;
  for (const auto& row : matrix.rows()) {
    json values = json::object();
    bool missing = false;
    for (std::size_t f = 0; f < best.features.size(); ++f) {
      values[best.features.features[f].name] = agents::value_to_json(row.values[f]);
      missing = missing || is_missing(row.values[f]);
    }
    with_missing += missing ? 1 : 0;
    json line = {{"id", row.id}, {"values", std::move(values)}};
    if (!row.label.empty()) line["label"] = row.label;
    lines += line.dump() + "\n";
  }
  if (options.output.empty()) {
    out << lines;
  } else {
    write_file_atomic(options.output, lines);
    out << fmt::format("{} rows written to {} ({} with missing values)\n", matrix.num_rows(),
                       options.output.string(), with_missing);
  }
  return kExitOk;
}

int run_evaluate(const EvaluateOptions& options, std::ostream& out) {
  const auto schema = read_best_features(options.schema).features;

  std::map<std::string, std::string> label_by_id;
  if (!options.labels.empty()) {
    RecordFields fields;
    for (const auto& r : read_records(options.labels,
                                      options.labels_format.value_or(
                                          format_from_extension(options.labels)),
                                      fields))
      label_by_id[r.id] = r.label;
  }

  std::vector<FeatureRow> rows;
  std::set<std::string> seen_ids;
  {
    std::istringstream in(read_file(options.features));
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
      ++line;
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      json doc;
      try {
        doc = json::parse(raw);
      } catch (const json::parse_error& e) {
        throw MalformedRecord(line, e.what());
      }
      if (!doc.is_object() || !doc.contains("id") || !doc.contains("values") ||
          !doc.at("values").is_object())
        throw MalformedRecord(line, "expected {\"id\", \"values\": {...}}");
      FeatureRow row;
      row.id = doc.at("id").is_string() ? doc.at("id").get<std::string>() : doc.at("id").dump();
      if (auto it = label_by_id.find(row.id); it != label_by_id.end()) {
        row.label = it->second;
      } else if (doc.contains("label") && doc.at("label").is_string()) {
        row.label = doc.at("label").get<std::string>();
      }
      if (row.label.empty()) throw MalformedRecord(line, "row '" + row.id + "' has no label");
      const auto& values = doc.at("values");
      for (const auto& def : schema.features) {
        auto it = values.find(def.name);
        row.values.push_back(it == values.end()
                                 ? FeatureValue{Missing{MissingReason::kParseFailed}}
                                 : agents::value_from_json(*it, def.value_type));
      }
      rows.push_back(std::move(row));
    }
  }

  std::map<std::string, std::size_t> per_class;
  for (const auto& r : rows) ++per_class[r.label];
  if (per_class.size() < 2)
    throw DegenerateLabels("evaluation needs at least two classes, found " +
                           std::to_string(per_class.size()));
  for (const auto& [name, n] : per_class)
    if (n < options.k_folds)
      throw TooFewPerClass(fmt::format("class '{}' has {} rows, {} folds need one each", name,
                                       n, options.k_folds));
  std::vector<std::string> class_names;
  for (const auto& [name, _] : per_class) class_names.push_back(name);

  const FeatureMatrix matrix(schema, class_names, std::move(rows));
  metrics::EvaluationConfig eval;
  eval.k_folds = options.k_folds;
  eval.l2 = options.l2;
  eval.seed = options.seed;
  const auto bundle = metrics::compute_metrics(matrix, eval);

  out << agents::render_metrics_table(bundle) << "\n";
  if (!bundle.ok) out << "evaluation failed: " << bundle.note << "\n";
  if (!options.output.empty()) write_file_atomic(options.output, bundle.to_json().dump(2) + "\n");
  return bundle.ok ? kExitOk : kExitFailure;
}

int run_compare(const std::vector<fs::path>& run_dirs, const fs::path& output,
                std::ostream& out) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::vector<RunView> runs;
  for (const auto& dir : run_dirs) {
    RunView view;
    view.label = dir.filename().empty() ? dir.parent_path().filename().string()
                                        : dir.filename().string();
    const fs::path manifest = dir / RunStore::kManifest;
    if (!fs::exists(manifest)) throw ConfigError(dir.string() + " has no manifest");
    const auto doc = json::parse(read_file(manifest));
    view.mode = doc.at("config").at("search").at("mode").get<std::string>();
    auto log = read_trial_log(dir / RunStore::kTrials);
    if (log.truncated_tail) spdlog::warn("{}", log.diagnostic);
    view.trials = std::move(log.trials);
    runs.push_back(std::move(view));
  }
  const auto text = render_comparison(runs);
  out << text;
  if (!output.empty()) write_file_atomic(output, text);
  return kExitOk;
}

int run_cost(const CostOptions& options, std::ostream& out) {
  const RunConfig config = resolve_config(options.common);
  cost::CostParams p;
  lm::UsageLedger usage;
  bool have_usage = false;
  const fs::path dir = config.run_dir;
  if (!dir.empty() && fs::exists(dir / RunStore::kCost)) {
    p = cost_params_from_json(json::parse(read_file(dir / RunStore::kCost)).at("params"));
    if (fs::exists(dir / RunStore::kUsage)) {
      usage = lm::UsageLedger::from_json(json::parse(read_file(dir / RunStore::kUsage)));
      have_usage = true;
    }
  } else {
    // No run to measure: assume typical lengths unless given.
    p.m_fp = config.cost_weights.m_fp;
    p.m_e = config.cost_weights.m_e;
    p.m_s = config.cost_weights.m_s;
    p.L_t = 60;
    p.L_f = 40.0 * static_cast<double>(config.optimizer.agents.max_features);
    p.L_phi = 50.0 + p.L_t * static_cast<double>(config.optimizer.example_set_size);
    p.N_A = static_cast<double>(config.dataset.annotation_size);
    p.N_d = static_cast<double>(config.optimizer.n_example_sets);
    p.N_iter = static_cast<double>(config.optimizer.effective_n_iter());
  }
  auto set = [](double& field, const std::optional<double>& v) {
    if (v) field = *v;
  };
  set(p.m_fp, options.m_fp);
  set(p.m_e, options.m_e);
  set(p.m_s, options.m_s);
  set(p.L_phi, options.L_phi);
  set(p.L_t, options.L_t);
  set(p.L_f, options.L_f);
  set(p.N_A, options.N_A);
  set(p.N_d, options.N_d);
  set(p.N_iter, options.N_iter);

  const auto b = cost::estimate_cost(p);
  out << fmt::format(
      "parameters: m_fp={} m_e={} m_s={} L_phi={} L_t={} L_f={} N_A={} N_d={} N_iter={}\n",
      p.m_fp, p.m_e, p.m_s, p.L_phi, p.L_t, p.L_f, p.N_A, p.N_d, p.N_iter);
  out << fmt::format("propose term:   {:.6g}\nextract term:   {:.6g}\nscore term:     {:.6g}\n",
                     b.propose_term, b.extract_term, b.score_term);
  out << fmt::format("one evaluation: {:.6g}\nwhole run:      {:.6g}\ndominant term:  {}\n",
                     b.eval_total, b.run_total, cost::to_string(b.dominant));
  if (have_usage) out << "measured: " << cost::reconcile(usage, b).summary << "\n";
  return kExitOk;
}

}  // namespace featopt::io
