// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "featopt/metrics/encoding.hpp"
#include "featopt/metrics/evaluation.hpp"
#include "featopt/metrics/information.hpp"
#include "featopt/metrics/logreg.hpp"
#include "featopt/metrics/shap.hpp"
#include "featopt/random.hpp"

namespace {

using namespace featopt;

// Rows of `n_features` noisy Boolean features over three classes; the first
// two carry the label.
FeatureMatrix bool_matrix(std::size_t rows, std::size_t n_features) {
  FeatureSet fs;
  for (std::size_t f = 0; f < n_features; ++f)
    fs.features.push_back({"f" + std::to_string(f), FeatureValueType::boolean(), "d", "p"});
  Rng rng(derive_seed(11, "bench"));
  std::vector<FeatureRow> out;
  const std::vector<std::string> classes{"a", "b", "c"};
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t y = uniform_index(rng, 3);
    std::vector<FeatureValue> values;
    for (std::size_t f = 0; f < n_features; ++f) {
      const bool signal = f < 2 ? (y > f) : uniform_unit(rng) < 0.5;
      values.emplace_back(uniform_unit(rng) < 0.1 ? !signal : signal);
    }
    out.push_back({"r" + std::to_string(i), classes[y], std::move(values)});
  }
  return FeatureMatrix(fs, classes, std::move(out));
}

void BM_TrainLogreg(benchmark::State& state) {
  const auto enc = metrics::encode(bool_matrix(512, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::train_logreg(enc, 1.0));
}
BENCHMARK(BM_TrainLogreg)->Arg(6)->Arg(12)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_LinearShap(benchmark::State& state) {
  const auto enc = metrics::encode(bool_matrix(512, static_cast<std::size_t>(state.range(0))));
  const auto model = metrics::train_logreg(enc, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::linear_shap_importance(model, enc));
}
BENCHMARK(BM_LinearShap)->Arg(6)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_MutualInformation(benchmark::State& state) {
  const auto m = bool_matrix(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::mutual_information(m, "f0"));
}
BENCHMARK(BM_MutualInformation)->Arg(512)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_ComputeMetrics(benchmark::State& state) {
  const auto m = bool_matrix(512, 8);
  metrics::EvaluationConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::compute_metrics(m, config));
}
BENCHMARK(BM_ComputeMetrics)->Unit(benchmark::kMillisecond);

}  // namespace
