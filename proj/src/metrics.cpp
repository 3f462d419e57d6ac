// Copyright 2026 The hierseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hierseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hierseg/error.hpp"

namespace hierseg {

using nlohmann::json;

namespace {

void check_pair(std::size_t a, std::size_t b, std::size_t min_size, const char* what) {
  if (a != b) {
    fail(ErrorKind::shape, std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                               std::to_string(b));
  }
  if (a < min_size) {
    fail(ErrorKind::invalid_argument, std::string(what) + ": needs at least " + std::to_string(min_size) +
                                          " examples");
  }
}

json stats_json(const ClassStats& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json MetricsRecord::to_json() const {
  return {{"rmse", optional_json(rmse)},
          {"mae", optional_json(mae)},
          {"macro_f1", optional_json(macro_f1)},
          {"low", stats_json(low)},
          {"high", stats_json(high)},
          {"n_examples", n_examples},
          {"n_clamped", n_clamped}};
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred.size(), truth.size(), 1, "rmse");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(total / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred.size(), truth.size(), 1, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

double macro_f1(std::span<const Binary> pred, std::span<const Binary> truth, ClassStats* low, ClassStats* high) {
  check_pair(pred.size(), truth.size(), 1, "macro_f1");
  double sum = 0.0;
  int classes = 0;
  for (Binary c : {Binary::low, Binary::high}) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && truth[i] == c) ++tp;
      if (pred[i] == c && truth[i] != c) ++fp;
      if (pred[i] != c && truth[i] == c) ++fn;
    }
    ClassStats s;
    s.support = tp + fn;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = tp ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
    if (tp + fp + fn > 0) {
      sum += s.f1;
      ++classes;
    }
    if (c == Binary::low && low) *low = s;
    if (c == Binary::high && high) *high = s;
  }
  return sum / classes;
}

MetricsRecord regression_metrics(std::span<const double> pred, std::span<const double> truth) {
  MetricsRecord r;
  r.rmse = rmse(pred, truth);
  r.mae = mae(pred, truth);
  r.n_examples = pred.size();
  return r;
}

MetricsRecord classification_metrics(std::span<const Binary> pred, std::span<const Binary> truth) {
  MetricsRecord r;
  r.macro_f1 = macro_f1(pred, truth, &r.low, &r.high);
  r.n_examples = pred.size();
  return r;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x.size(), y.size(), 2, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::numeric, "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x.size(), y.size(), 2, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

}  // namespace hierseg
