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

#include "hierseg/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "hierseg/error.hpp"

namespace hierseg::nn {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != element_count(shape_)) {
    fail(ErrorKind::shape, "tensor of shape " + shape_string(shape_) + " cannot hold " +
                               std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    fail(ErrorKind::shape, "axis " + std::to_string(axis) + " out of range for shape " +
                               shape_string(shape_));
  }
  return shape_[axis];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t cols = shape_[1];
  return std::span<double>(values_).subspan(r * cols, cols);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t cols = shape_[1];
  return std::span<const double>(values_).subspan(r * cols, cols);
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string name_, Shape shape)
    : name(std::move(name_)), value(shape), grad(shape) {}

MaskedBatch::MaskedBatch(std::size_t batch, std::size_t time, std::size_t features)
    : values({batch, time, features}), mask(batch * time, 0) {}

Tensor MaskedBatch::sequence(std::size_t b) const {
  const std::size_t t = time_steps();
  const std::size_t f = features();
  const auto all = values.values();
  return Tensor({t, f}, std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(b * t * f),
                                            all.begin() + static_cast<std::ptrdiff_t>((b + 1) * t * f)));
}

Mask MaskedBatch::sequence_mask(std::size_t b) const {
  const std::size_t t = time_steps();
  return Mask(mask.begin() + static_cast<std::ptrdiff_t>(b * t),
              mask.begin() + static_cast<std::ptrdiff_t>((b + 1) * t));
}

}  // namespace hierseg::nn
