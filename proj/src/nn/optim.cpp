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

#include "hierseg/nn/optim.hpp"

#include <cmath>

#include "hierseg/error.hpp"

namespace hierseg::nn {

const char* to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  fail(ErrorKind::parse, "unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double weight_decay)
    : kind_(kind), learning_rate_(learning_rate), weight_decay_(weight_decay) {
  if (!(learning_rate > 0.0)) fail(ErrorKind::validation, "learning rate must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    fail(ErrorKind::validation, "weight decay must be finite and non-negative");
  }
}

void Optimizer::step(std::span<Parameter* const> params) {
  if (kind_ == OptimizerKind::sgd) {
    for (Parameter* p : params) {
      for (std::size_t k = 0; k < p->value.size(); ++k) {
        p->value[k] -= learning_rate_ * (p->grad[k] + weight_decay_ * p->value[k]);
      }
    }
    ++steps_;
    return;
  }
  if (first_moment_.empty()) {
    for (const Parameter* p : params) {
      first_moment_.emplace_back(p->value.shape());
      second_moment_.emplace_back(p->value.shape());
    }
  }
  if (first_moment_.size() != params.size()) {
    fail(ErrorKind::shape, "optimizer state holds " + std::to_string(first_moment_.size()) +
                               " tensors for " + std::to_string(params.size()) + " parameters");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    if (m.shape() != p.value.shape()) {
      fail(ErrorKind::shape, "optimizer state for '" + p.name + "' has shape " +
                                 shape_string(m.shape()) + ", parameter has " +
                                 shape_string(p.value.shape()));
    }
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * g;
      v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p.value[k] -= learning_rate_ * (m_hat / (std::sqrt(v_hat) + epsilon) + weight_decay_ * p.value[k]);
    }
  }
}

std::vector<Tensor> snapshot(std::span<Parameter* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(std::span<Parameter* const> params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace hierseg::nn
