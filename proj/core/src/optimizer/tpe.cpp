// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/optimizer/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "featopt/errors.hpp"
#include "featopt/random.hpp"

namespace featopt::optimizer {
namespace {

using Pair = std::pair<std::size_t, std::size_t>;

std::size_t draw(const std::vector<double>& density, Rng& rng) {
  double u = uniform_unit(rng);
  for (std::size_t i = 0; i < density.size(); ++i) {
    u -= density[i];
    if (u < 0.0) return i;
  }
  return density.size() - 1;
}

}  // namespace

void TpeOptions::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("tpe gamma must be in (0, 1)");
  if (!(prior_weight > 0.0)) throw ConfigError("tpe prior weight must be positive");
  if (n_candidates == 0) throw ConfigError("tpe candidate count must be positive");
}

TpeState::TpeState(TpeOptions options, std::uint64_t seed)
    : options_(options), seed_(seed) {
  options_.validate();
}

void TpeState::observe(const PromptCandidate& candidate, double score) {
  history_.push_back({candidate, std::isfinite(score) ? score : 0.0});
}

std::size_t TpeState::times_evaluated(const PromptCandidate& candidate) const {
  return static_cast<std::size_t>(
      std::count_if(history_.begin(), history_.end(),
                    [&](const TpeObservation& o) { return o.candidate == candidate; }));
}

std::vector<double> categorical_density(const std::vector<std::size_t>& values,
                                        std::size_t count, double prior_weight) {
  std::vector<double> density(count, prior_weight);
  for (auto v : values) density.at(v) += 1.0;
  const double total = static_cast<double>(values.size()) + prior_weight * count;
  for (auto& d : density) d /= total;
  return density;
}

PromptCandidate tpe_suggest(const TpeState& state, std::size_t n_instructions,
                            std::size_t n_example_sets) {
  if (n_instructions == 0 || n_example_sets == 0)
    throw PreconditionFailed("search space is empty");
  const auto& opts = state.options();
  const auto& history = state.history();
  Rng rng(derive_seed(state.seed(), static_cast<std::uint64_t>(history.size())));

  std::set<Pair> seen;
  std::map<Pair, std::size_t> counts;
  for (const auto& o : history) {
    if (o.candidate.instruction_id >= n_instructions ||
        o.candidate.example_set_id >= n_example_sets)
      throw PreconditionFailed("history refers to a pair outside the search space");
    Pair p{o.candidate.instruction_id, o.candidate.example_set_id};
    seen.insert(p);
    ++counts[p];
  }
  const std::size_t product = n_instructions * n_example_sets;
  const bool exhausted = seen.size() >= product;

  if (history.size() < opts.n_startup) {
    if (exhausted) {
      return {static_cast<std::size_t>(uniform_index(rng, n_instructions)),
              static_cast<std::size_t>(uniform_index(rng, n_example_sets))};
    }
    // Uniform over unevaluated pairs: draw a rank among them.
    std::uint64_t r = uniform_index(rng, product - seen.size());
    for (std::size_t i = 0; i < n_instructions; ++i) {
      for (std::size_t j = 0; j < n_example_sets; ++j) {
        if (seen.count({i, j})) continue;
        if (r-- == 0) return {i, j};
      }
    }
  }

  // Split at the gamma quantile; stable order keeps earlier trials first on ties.
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].score > history[b].score;
  });
  const auto n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(opts.gamma * static_cast<double>(history.size()))));
  std::vector<std::size_t> good_i, good_e, bad_i, bad_e;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& c = history[order[r]].candidate;
    if (r < n_good) {
      good_i.push_back(c.instruction_id);
      good_e.push_back(c.example_set_id);
    } else {
      bad_i.push_back(c.instruction_id);
      bad_e.push_back(c.example_set_id);
    }
  }
  const auto l_i = categorical_density(good_i, n_instructions, opts.prior_weight);
  const auto l_e = categorical_density(good_e, n_example_sets, opts.prior_weight);
  const auto g_i = categorical_density(bad_i, n_instructions, opts.prior_weight);
  const auto g_e = categorical_density(bad_e, n_example_sets, opts.prior_weight);
  auto ratio = [&](const Pair& p) {
    return (l_i[p.first] / g_i[p.first]) * (l_e[p.second] / g_e[p.second]);
  };

  std::vector<Pair> candidates;
  if (product <= opts.enumeration_limit) {
    for (std::size_t i = 0; i < n_instructions; ++i)
      for (std::size_t j = 0; j < n_example_sets; ++j)
        if (exhausted || !seen.count({i, j})) candidates.emplace_back(i, j);
  } else {
    std::set<Pair> drawn;
    const std::size_t max_attempts = opts.n_candidates * 16;
    for (std::size_t a = 0; a < max_attempts && candidates.size() < opts.n_candidates; ++a) {
      Pair p{draw(l_i, rng), draw(l_e, rng)};
      if ((exhausted || !seen.count(p)) && drawn.insert(p).second) candidates.push_back(p);
    }
    if (candidates.empty()) {
      for (std::size_t i = 0; i < n_instructions && candidates.empty(); ++i)
        for (std::size_t j = 0; j < n_example_sets; ++j)
          if (!seen.count({i, j})) {
            candidates.emplace_back(i, j);
            break;
          }
    }
  }

  double best = -1.0;
  for (const auto& p : candidates) best = std::max(best, ratio(p));
  std::vector<Pair> tied;
  std::size_t min_count = SIZE_MAX;
  for (const auto& p : candidates) {
    if (ratio(p) < best * (1.0 - 1e-12)) continue;
    auto it = counts.find(p);
    const std::size_t n = it == counts.end() ? 0 : it->second;
    if (n < min_count) {
      min_count = n;
      tied.clear();
    }
    if (n == min_count) tied.push_back(p);
  }
  const Pair pick = tied[uniform_index(rng, tied.size())];
  return {pick.first, pick.second};
}

}  // namespace featopt::optimizer
