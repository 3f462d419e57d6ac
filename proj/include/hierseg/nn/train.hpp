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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/nn/optim.hpp"
#include "hierseg/nn/tensor.hpp"

namespace hierseg::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t early_stop_patience = 5;  // 0 disables early stopping
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double weight_decay = 0.0;  // decoupled, see Optimizer

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainHistory {
  double initial_train_loss = 0.0;
  std::vector<double> train_loss;       // mean example loss seen during each epoch
  std::vector<double> validation_loss;  // after each epoch; empty without a validation split
  std::size_t best_epoch = 0;           // 1-based; 0 means the initial parameters won
  double best_loss = 0.0;               // monitored loss at best_epoch
  std::size_t n_train = 0;
  std::size_t n_validation = 0;

  nlohmann::json to_json() const;
};

/// Per-example loss callbacks. `loss_and_grad` adds scale * dL/dtheta into
/// the parameter gradients and returns the unscaled loss.
struct Objective {
  std::function<double(std::size_t)> loss;
  std::function<double(std::size_t, double)> loss_and_grad;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded split of examples into train and validation. When `groups` is given,
/// whole groups go to one side (e.g. all segments of a session).
Split split_examples(std::size_t n, double validation_fraction, std::uint64_t seed,
                     std::span<const std::size_t> groups = {});

/// Mini-batch training with early stopping on validation loss; the parameters
/// with the best monitored loss are restored before returning.
TrainHistory fit(std::span<Parameter* const> params, std::size_t n_examples,
                 const Objective& objective, const TrainConfig& config,
                 std::span<const std::size_t> groups = {});

}  // namespace hierseg::nn
