// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "featopt/agents/agents.hpp"
#include "featopt/fixtures/planted.hpp"
#include "featopt/lm/gateway.hpp"
#include "featopt/lm/scripted_lm.hpp"

namespace {

using namespace featopt;

// Gateway and agent overhead for a 512-row extraction against the scripted
// backend, at different in-flight limits.
void BM_ExtractAllScripted(benchmark::State& state) {
  spdlog::set_level(spdlog::level::warn);
  fixtures::CorpusOptions options;
  options.n_records = 512;
  const auto corpus = fixtures::make_planted_corpus(options);
  auto lm = std::make_shared<lm::ScriptedLm>(
      lm::ScriptedLm::from_json(fixtures::scripted_transcript(corpus)));
  lm::GatewayOptions g;
  g.max_in_flight = static_cast<int>(state.range(0));
  g.retain_audit_messages = false;
  const auto schema = fixtures::planted_schema();
  agents::AgentSettings settings;
  for (auto _ : state) {
    lm::LmGateway gateway(lm, g);
    benchmark::DoNotOptimize(agents::extract_all(gateway, corpus.records, schema,
                                                 corpus.class_names, settings, "bench"));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus.records.size()));
}
BENCHMARK(BM_ExtractAllScripted)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
