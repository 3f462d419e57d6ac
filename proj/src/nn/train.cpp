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

#include "hierseg/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hierseg/error.hpp"
#include "hierseg/rng.hpp"

namespace hierseg::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorKind::validation, "learning_rate must be positive");
  if (batch_size == 0) fail(ErrorKind::validation, "batch_size must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail(ErrorKind::validation, "validation_fraction must lie in (0, 1)");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    fail(ErrorKind::validation, "weight_decay must be finite and non-negative");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"early_stop_patience", early_stop_patience},
          {"validation_fraction", validation_fraction},
          {"seed", seed},
          {"optimizer", to_string(optimizer)},
          {"weight_decay", weight_decay}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.weight_decay = j.value("weight_decay", 0.0);
  return c;
}

nlohmann::json TrainHistory::to_json() const {
  return {{"initial_train_loss", initial_train_loss},
          {"train_loss", train_loss},
          {"validation_loss", validation_loss},
          {"best_epoch", best_epoch},
          {"best_loss", best_loss},
          {"n_train", n_train},
          {"n_validation", n_validation}};
}

Split split_examples(std::size_t n, double validation_fraction, std::uint64_t seed,
                     std::span<const std::size_t> groups) {
  if (!groups.empty() && groups.size() != n) {
    fail(ErrorKind::shape, "split_examples: " + std::to_string(groups.size()) + " group ids for " +
                               std::to_string(n) + " examples");
  }
  // Distinct group ids in first-appearance order.
  std::vector<std::size_t> ids;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = groups.empty() ? i : groups[i];
    if (slot.emplace(g, ids.size()).second) ids.push_back(g);
  }
  Split split;
  const std::size_t n_groups = ids.size();
  std::size_t n_val = 0;
  if (n_groups >= 2) {
    n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n_groups)));
    n_val = std::clamp<std::size_t>(n_val, 1, n_groups - 1);
  }
  std::vector<std::size_t> order(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x5eed));
  rng.shuffle(order);
  std::vector<std::uint8_t> is_val(n_groups, 0);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = groups.empty() ? i : groups[i];
    (is_val[slot.at(g)] ? split.validation : split.train).push_back(i);
  }
  return split;
}

namespace {

double mean_loss(const Objective& objective, const std::vector<std::size_t>& examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i : examples) total += objective.loss(i);
  return total / static_cast<double>(examples.size());
}

void require_finite(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->value.all_finite()) {
      fail(ErrorKind::numeric, "parameter '" + p->name + "' became non-finite during training");
    }
  }
}

}  // namespace

TrainHistory fit(std::span<Parameter* const> params, std::size_t n_examples,
                 const Objective& objective, const TrainConfig& config,
                 std::span<const std::size_t> groups) {
  config.validate();
  if (n_examples == 0) fail(ErrorKind::validation, "cannot train on zero examples");
  const Split split = split_examples(n_examples, config.validation_fraction, config.seed, groups);

  TrainHistory history;
  history.n_train = split.train.size();
  history.n_validation = split.validation.size();
  const bool has_validation = !split.validation.empty();
  const auto& monitored = has_validation ? split.validation : split.train;

  history.initial_train_loss = mean_loss(objective, split.train);
  history.best_loss = has_validation ? mean_loss(objective, split.validation)
                                     : history.initial_train_loss;
  history.best_epoch = 0;
  std::vector<Tensor> best = snapshot(params);

  Optimizer optimizer(config.optimizer, config.learning_rate, config.weight_decay);
  Rng rng(mix_seed(config.seed, 0xba7c4));
  std::vector<std::size_t> order = split.train;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_grad(params);
      for (std::size_t k = start; k < end; ++k) {
        epoch_total += objective.loss_and_grad(order[k], scale);
      }
      optimizer.step(params);
    }
    require_finite(params);
    history.train_loss.push_back(epoch_total / static_cast<double>(order.size()));

    const double current = has_validation ? mean_loss(objective, monitored)
                                          : history.train_loss.back();
    if (has_validation) history.validation_loss.push_back(current);
    if (current < history.best_loss) {
      history.best_loss = current;
      history.best_epoch = epoch;
      best = snapshot(params);
      since_best = 0;
    } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
      break;
    }
  }
  restore(params, best);
  zero_grad(params);
  return history;
}

}  // namespace hierseg::nn
