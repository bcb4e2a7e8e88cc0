// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace featopt::optimizer {

// (f1 + lambda * interp) / (1 + lambda). Throws PreconditionFailed when f1 or
// interp leave [0, 1] or lambda is negative.
double combined_score(double f1, double interp, double lambda);

}  // namespace featopt::optimizer
