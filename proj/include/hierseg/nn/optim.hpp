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

#include <span>
#include <string>
#include <vector>

#include "hierseg/nn/tensor.hpp"

namespace hierseg::nn {

enum class OptimizerKind { adam, sgd };

const char* to_string(OptimizerKind kind) noexcept;
OptimizerKind optimizer_from_string(const std::string& name);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias corrected) or plain SGD.
/// A positive weight_decay shrinks each value by learning_rate * weight_decay after the update
/// (decoupled decay, as in AdamW).
/// Moment state is created on the first step and bound to the parameter order.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, double weight_decay = 0.0);

  void step(std::span<Parameter* const> params);

  std::size_t steps_taken() const { return steps_; }
  double learning_rate() const { return learning_rate_; }
  double weight_decay() const { return weight_decay_; }

  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

 private:
  OptimizerKind kind_;
  double learning_rate_;
  double weight_decay_;
  std::size_t steps_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

std::vector<Tensor> snapshot(std::span<Parameter* const> params);
void restore(std::span<Parameter* const> params, const std::vector<Tensor>& values);
void zero_grad(std::span<Parameter* const> params);

}  // namespace hierseg::nn
