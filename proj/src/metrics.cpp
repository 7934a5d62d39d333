// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "molsets/error.hpp"
#include "molsets/log.hpp"

namespace molsets::metrics {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) {
    throw DimensionError("metric inputs differ in length: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  if (a.size() < min_n) throw ContractError("metric needs at least " + std::to_string(min_n) + " values");
}

struct Moments {
  double var_a = 0.0;
  double var_b = 0.0;
  double cov = 0.0;
};

Moments moments(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  Moments m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    m.var_a += da * da;
    m.var_b += db * db;
    m.cov += da * db;
  }
  m.var_a /= n;
  m.var_b /= n;
  m.cov /= n;
  return m;
}

double correlation(const Moments& m) { return std::clamp(m.cov / std::sqrt(m.var_a * m.var_b), -1.0, 1.0); }

}  // namespace

double mse(std::span<const double> preds, std::span<const double> targets) {
  check_lengths(preds, targets, 1);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return total / static_cast<double>(preds.size());
}

double pearson(std::span<const double> targets, std::span<const double> preds) {
  check_lengths(targets, preds, 2);
  const Moments m = moments(targets, preds);
  if (!(m.var_a > 0.0) || !(m.var_b > 0.0)) throw NumericError("pearson: zero variance input");
  return correlation(m);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end + 1);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

double spearman(std::span<const double> targets, std::span<const double> preds) {
  check_lengths(targets, preds, 2);
  const auto rt = average_ranks(targets);
  const auto rp = average_ranks(preds);
  const Moments m = moments(rt, rp);
  if (!(m.var_a > 0.0) || !(m.var_b > 0.0)) {
    log_warning("spearman: zero rank variance, returning 0");
    return 0.0;
  }
  return correlation(m);
}

MetricsReport evaluate_predictions(std::span<const double> targets, std::span<const double> preds) {
  MetricsReport report;
  report.n = targets.size();
  report.mse = mse(preds, targets);
  report.pearson_rp = pearson(targets, preds);
  report.spearman_rs = spearman(targets, preds);
  return report;
}

}  // namespace molsets::metrics
