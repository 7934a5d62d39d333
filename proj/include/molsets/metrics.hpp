// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace molsets::metrics {

struct MetricsReport {
  double pearson_rp = 0.0;
  double spearman_rs = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

/// Mean of squared differences. Lengths must match and be >= 1.
double mse(std::span<const double> preds, std::span<const double> targets);

/// Population-convention Pearson correlation. Needs n >= 2 and nonzero
/// variance on both sides; throws NumericError otherwise.
double pearson(std::span<const double> targets, std::span<const double> preds);

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. A side with zero rank variance gives 0.
double spearman(std::span<const double> targets, std::span<const double> preds);

MetricsReport evaluate_predictions(std::span<const double> targets, std::span<const double> preds);

}  // namespace molsets::metrics
