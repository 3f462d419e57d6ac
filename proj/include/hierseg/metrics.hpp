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

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/corpus.hpp"

namespace hierseg {

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // true examples of the class
};

struct MetricsRecord {
  std::optional<double> rmse;
  std::optional<double> mae;
  std::optional<double> macro_f1;
  ClassStats low;
  ClassStats high;
  std::size_t n_examples = 0;
  std::size_t n_clamped = 0;  // regression outputs clamped into [0, A]

  nlohmann::json to_json() const;
};

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

/// Unweighted mean of per-class F1 over the classes that occur in either the
/// truth or the predictions.
double macro_f1(std::span<const Binary> pred, std::span<const Binary> truth, ClassStats* low = nullptr,
                ClassStats* high = nullptr);

MetricsRecord regression_metrics(std::span<const double> pred, std::span<const double> truth);
MetricsRecord classification_metrics(std::span<const Binary> pred, std::span<const Binary> truth);

/// Ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Constant input is an error.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace hierseg
