// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt/optimizer/score.hpp"

#include <cmath>
#include <string>

#include "featopt/errors.hpp"

namespace featopt::optimizer {

double combined_score(double f1, double interp, double lambda) {
  if (!(f1 >= 0.0 && f1 <= 1.0)) throw PreconditionFailed("f1 outside [0, 1]");
  if (!(interp >= 0.0 && interp <= 1.0))
    throw PreconditionFailed("interpretability score outside [0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw PreconditionFailed("lambda must be finite and non-negative");
  return (f1 + lambda * interp) / (1.0 + lambda);
}

}  // namespace featopt::optimizer
