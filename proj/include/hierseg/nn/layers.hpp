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
#include "hierseg/rng.hpp"

namespace hierseg::nn {

enum class Activation { linear, tanh, sigmoid };

const char* to_string(Activation activation) noexcept;
Activation activation_from_string(const std::string& name);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)). Rank-1 tensors are treated as
/// a single column.
void glorot_uniform(Tensor& tensor, Rng& rng);

double sigmoid(double x) noexcept;

struct DenseCache {
  Tensor input;
  Tensor output;
};

/// y = act(x W + b) with x of shape [n, in] and W of shape [in, out].
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in_features, std::size_t out_features,
        Activation activation);

  void initialize(Rng& rng);

  Tensor forward(const Tensor& x, DenseCache* cache = nullptr) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Tensor backward(const Tensor& grad_output, const DenseCache& cache);

  /// Pre-activation x W + b for a single input row.
  double linear_output(std::span<const double> x, std::size_t unit = 0) const;

  std::size_t in_features() const { return weight.value.dim(0); }
  std::size_t out_features() const { return weight.value.dim(1); }
  Activation activation() const { return activation_; }

  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
  std::vector<const Parameter*> parameters() const { return {&weight, &bias}; }

  Parameter weight;  // [in, out]
  Parameter bias;    // [out]

 private:
  Activation activation_ = Activation::linear;
};

struct LstmCache {
  std::vector<std::size_t> order;  // positions in processing order
  Tensor input;                    // [T, in]
  Tensor gates;                    // [T, 4H] post-activation i, f, g, o
  Tensor cell;                     // [T, H]
  Tensor cell_tanh;                // [T, H]
  Tensor prev_cell;                // [T, H]
  Tensor prev_hidden;              // [T, H]
};

/// Single-direction LSTM over the unmasked positions of one sequence.
/// Masked positions are skipped: they neither read input nor update state,
/// and their output rows are zero.
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, std::size_t input_size, std::size_t hidden_size, bool reverse);

  void initialize(Rng& rng);

  Tensor forward(const Tensor& x, const Mask& mask, LstmCache* cache = nullptr) const;
  Tensor backward(const Tensor& grad_output, const LstmCache& cache);

  std::size_t input_size() const { return w_input.value.dim(0); }
  std::size_t hidden_size() const { return w_hidden.value.dim(0); }
  bool reverse() const { return reverse_; }

  std::vector<Parameter*> parameters() { return {&w_input, &w_hidden, &bias}; }
  std::vector<const Parameter*> parameters() const { return {&w_input, &w_hidden, &bias}; }

  Parameter w_input;   // [in, 4H]
  Parameter w_hidden;  // [H, 4H]
  Parameter bias;      // [4H]

 private:
  bool reverse_ = false;
};

struct BiLstmCache {
  LstmCache forward;
  LstmCache backward;
};

/// Output at each step is [forward_h, backward_h], so 2H features.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, std::size_t input_size, std::size_t hidden_size);

  void initialize(Rng& rng);

  Tensor forward(const Tensor& x, const Mask& mask, BiLstmCache* cache = nullptr) const;
  Tensor backward(const Tensor& grad_output, const BiLstmCache& cache);

  /// Runs every row of the batch independently.
  MaskedBatch forward(const MaskedBatch& batch) const;

  std::size_t input_size() const { return forward_.input_size(); }
  std::size_t hidden_size() const { return forward_.hidden_size(); }
  std::size_t output_size() const { return 2 * hidden_size(); }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  Lstm& forward_lstm() { return forward_; }
  Lstm& backward_lstm() { return backward_; }
  const Lstm& forward_lstm() const { return forward_; }
  const Lstm& backward_lstm() const { return backward_; }

 private:
  Lstm forward_;
  Lstm backward_;
};

/// Softmax over unmasked entries; masked entries are exactly zero.
std::vector<double> masked_softmax(std::span<const double> scores, const Mask& mask);

/// Row-wise variant for a [rows, cols] score matrix and a rows*cols mask.
Tensor masked_softmax(const Tensor& scores, const Mask& mask);

struct AttentionResult {
  Tensor pooled;                // [F]
  std::vector<double> weights;  // [T], zero on masked steps
};

struct AttentionCache {
  Tensor input;                 // [T, F]
  Tensor keys;                  // [T, A], tanh(h W + b)
  std::vector<double> weights;  // [T]
  Mask mask;
};

/// z_t = tanh(h_t W + b), alpha = masked_softmax(z_t . u), pooled = sum alpha_t h_t.
class AdditiveAttention {
 public:
  AdditiveAttention() = default;
  AdditiveAttention(const std::string& name, std::size_t input_size, std::size_t attention_size);

  void initialize(Rng& rng);

  AttentionResult forward(const Tensor& h, const Mask& mask, AttentionCache* cache = nullptr) const;
  /// Gradient of the pooled vector back into h and the parameters.
  Tensor backward(std::span<const double> grad_pooled, const AttentionCache& cache);

  std::size_t input_size() const { return weight.value.dim(0); }
  std::size_t attention_size() const { return weight.value.dim(1); }

  std::vector<Parameter*> parameters() { return {&weight, &bias, &context}; }
  std::vector<const Parameter*> parameters() const { return {&weight, &bias, &context}; }

  Parameter weight;   // [F, A]
  Parameter bias;     // [A]
  Parameter context;  // [A]
};

/// Weighted sum of unmasked rows. Weights must be non-negative and sum to one
/// over unmasked steps within 1e-9; masked weights are ignored.
Tensor average_pool(const Tensor& h, std::span<const double> weights, const Mask& mask);
Tensor average_pool_backward(std::span<const double> grad_pooled, std::span<const double> weights,
                             const Mask& mask, std::size_t time_steps);

}  // namespace hierseg::nn
