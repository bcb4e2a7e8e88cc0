// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "featopt/optimizer/tpe.hpp"

namespace {

using namespace featopt;

// One suggestion after `range(1)` observations on an n x n grid.
void BM_TpeSuggest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  optimizer::TpeState tpe({}, 3);
  for (std::int64_t i = 0; i < state.range(1); ++i) {
    const PromptCandidate c{static_cast<std::size_t>(i) % n, (static_cast<std::size_t>(i) / n) % n};
    tpe.observe(c, static_cast<double>((i * 37) % 101) / 100.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(optimizer::tpe_suggest(tpe, n, n));
}
BENCHMARK(BM_TpeSuggest)->Args({16, 128})->Args({16, 255})->Args({128, 256})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
