// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/sampling.hpp"

#include <map>
#include <numeric>

#include "featopt/errors.hpp"
#include "featopt/random.hpp"

namespace featopt {

namespace {

std::vector<std::size_t> draw_uniform(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  }
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> draw_stratified(
    const std::map<std::string, std::vector<std::size_t>>& by_class,
    std::size_t k, Rng& rng) {
  std::vector<std::vector<std::size_t>> pools;
  for (const auto& [label, members] : by_class) {
    auto pool = members;
    shuffle(pool, rng);
    pools.push_back(std::move(pool));
  }
  std::vector<std::size_t> out;
  std::vector<std::size_t> cursor(pools.size(), 0);
  while (out.size() < k) {
    for (std::size_t c = 0; c < pools.size() && out.size() < k; ++c) {
      if (cursor[c] < pools[c].size()) out.push_back(pools[c][cursor[c]++]);
    }
  }
  return out;
}

}  // namespace

std::vector<ExampleSet> sample_example_sets(
    const std::vector<LabeledExample>& train, std::size_t n_sets,
    std::size_t set_size, std::uint64_t seed, bool stratified) {
  if (set_size == 0) throw PreconditionFailed("example set size must be >= 1");
  if (train.size() < set_size) {
    throw TrainTooSmall("train split has " + std::to_string(train.size()) +
                        " examples, example sets need " +
                        std::to_string(set_size));
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_class[train[i].label].push_back(i);
  }
  std::vector<ExampleSet> sets;
  sets.reserve(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    Rng rng(derive_seed(seed, s));
    auto picks = stratified ? draw_stratified(by_class, set_size, rng)
                            : draw_uniform(train.size(), set_size, rng);
    ExampleSet set{s, {}};
    set.examples.reserve(picks.size());
    for (auto i : picks) set.examples.push_back(train[i]);
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace featopt
