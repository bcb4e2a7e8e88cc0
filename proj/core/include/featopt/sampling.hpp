// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "featopt/types.hpp"

namespace featopt {

// Draws n_sets example sets of `set_size` examples each. Within a set,
// sampling is uniform without replacement; sets are drawn independently and
// may share examples. With `stratified`, each set cycles through classes
// (sorted by name) before repeating one. Pure function of its arguments.
// Throws TrainTooSmall when train.size() < set_size.
std::vector<ExampleSet> sample_example_sets(
    const std::vector<LabeledExample>& train, std::size_t n_sets,
    std::size_t set_size, std::uint64_t seed, bool stratified = false);

}  // namespace featopt
