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

#include <cstddef>
#include <span>
#include <vector>

namespace hierseg::nn {

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // dL/dpred
};

/// Mean of squared errors.
LossValue mse(std::span<const double> pred, std::span<const double> target);

/// Per-class weights for binary cross-entropy, inversely proportional to
/// class frequency: w_c = n / (2 n_c).
struct ClassWeights {
  double low = 1.0;
  double high = 1.0;

  static ClassWeights from_counts(std::size_t low_count, std::size_t high_count);
};

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;  // dL/dlogit
};

/// -w_y log p_y with p_high = sigmoid(logit).
ScalarLoss weighted_cross_entropy(double logit, bool high, const ClassWeights& weights);

}  // namespace hierseg::nn
