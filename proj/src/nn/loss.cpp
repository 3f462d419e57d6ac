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

#include "hierseg/nn/loss.hpp"

#include <cmath>
#include <string>

#include "hierseg/error.hpp"
#include "hierseg/nn/layers.hpp"

namespace hierseg::nn {

LossValue mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    fail(ErrorKind::shape, "mse: " + std::to_string(pred.size()) + " predictions for " +
                               std::to_string(target.size()) + " targets");
  }
  LossValue out;
  out.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(target[i])) {
      fail(ErrorKind::numeric, "mse: non-finite input at index " + std::to_string(i));
    }
    const double d = pred[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.value /= n;
  return out;
}

ClassWeights ClassWeights::from_counts(std::size_t low_count, std::size_t high_count) {
  if (low_count == 0 || high_count == 0) {
    fail(ErrorKind::validation,
         "class weights need both classes present (low=" + std::to_string(low_count) +
             ", high=" + std::to_string(high_count) + ")");
  }
  const double n = static_cast<double>(low_count + high_count);
  return {n / (2.0 * static_cast<double>(low_count)), n / (2.0 * static_cast<double>(high_count))};
}

ScalarLoss weighted_cross_entropy(double logit, bool high, const ClassWeights& weights) {
  if (!std::isfinite(logit)) fail(ErrorKind::numeric, "weighted_cross_entropy: non-finite logit");
  if (!(weights.low > 0.0) || !(weights.high > 0.0)) {
    fail(ErrorKind::validation, "weighted_cross_entropy: class weights must be positive");
  }
  // log(1 + exp(-|x|)) form keeps both branches stable for large |logit|.
  const double softplus_neg = std::log1p(std::exp(-std::abs(logit)));
  const double p = sigmoid(logit);
  ScalarLoss out;
  if (high) {
    const double neg_log_p = softplus_neg + std::max(-logit, 0.0);
    out.value = weights.high * neg_log_p;
    out.grad = -weights.high * (1.0 - p);
  } else {
    const double neg_log_q = softplus_neg + std::max(logit, 0.0);
    out.value = weights.low * neg_log_q;
    out.grad = weights.low * p;
  }
  return out;
}

}  // namespace hierseg::nn
