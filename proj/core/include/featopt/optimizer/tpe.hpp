// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "featopt/types.hpp"

namespace featopt::optimizer {

struct TpeOptions {
  double gamma = 0.25;         // fraction of trials in the good set
  double prior_weight = 1.0;   // pseudo-count added to every category
  std::size_t n_startup = 10;  // uniform suggestions before modelling
  std::size_t enumeration_limit = 4096;
  std::size_t n_candidates = 64;  // draws from l(.) above the limit

  void validate() const;
};

struct TpeObservation {
  PromptCandidate candidate;
  double score = 0.0;  // failed trials observe 0
};

// Sampler state over a grid of n_instructions x n_example_sets. The RNG is
// re-derived from (seed, number of observations) on every suggestion, so a
// state rebuilt from a saved history suggests exactly what the original did.
class TpeState {
 public:
  TpeState(TpeOptions options, std::uint64_t seed);

  void observe(const PromptCandidate& candidate, double score);
  const std::vector<TpeObservation>& history() const { return history_; }
  const TpeOptions& options() const { return options_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t times_evaluated(const PromptCandidate& candidate) const;

 private:
  TpeOptions options_;
  std::uint64_t seed_;
  std::vector<TpeObservation> history_;
};

// Smoothed categorical density of one dimension over `count` categories.
std::vector<double> categorical_density(const std::vector<std::size_t>& values,
                                        std::size_t count, double prior_weight);

// Suggests the next pair. Pairs never evaluated are preferred while any
// remain; once the grid is exhausted suggestions repeat.
PromptCandidate tpe_suggest(const TpeState& state, std::size_t n_instructions,
                            std::size_t n_example_sets);

}  // namespace featopt::optimizer
