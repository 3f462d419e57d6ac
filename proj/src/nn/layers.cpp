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

#include "hierseg/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hierseg/error.hpp"

namespace hierseg::nn {

namespace {

void require_matrix(const Tensor& x, std::size_t cols, const char* what, const Shape& expected) {
  if (x.rank() != 2 || x.dim(1) != cols) {
    fail(ErrorKind::shape, std::string(what) + ": input shape " + shape_string(x.shape()) +
                               " does not match parameter shape " + shape_string(expected));
  }
}

void require_mask(const Tensor& x, const Mask& mask, const char* what) {
  if (mask.size() != x.dim(0)) {
    fail(ErrorKind::shape, std::string(what) + ": mask length " + std::to_string(mask.size()) +
                               " does not match " + std::to_string(x.dim(0)) + " time steps");
  }
}

}  // namespace

const char* to_string(Activation activation) noexcept {
  switch (activation) {
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  fail(ErrorKind::parse, "unknown activation '" + name + "'");
}

void glorot_uniform(Tensor& tensor, Rng& rng) {
  const std::size_t fan_in = tensor.rank() >= 1 ? tensor.dim(0) : 1;
  const std::size_t fan_out = tensor.rank() >= 2 ? tensor.dim(1) : 1;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : tensor.values()) v = rng.uniform(-limit, limit);
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(const std::string& name, std::size_t in_features, std::size_t out_features,
             Activation activation)
    : weight(name + ".weight", {in_features, out_features}),
      bias(name + ".bias", {out_features}),
      activation_(activation) {}

void Dense::initialize(Rng& rng) {
  glorot_uniform(weight.value, rng);
  bias.value.fill(0.0);
}

double Dense::linear_output(std::span<const double> x, std::size_t unit) const {
  const std::size_t in = in_features();
  const std::size_t out = out_features();
  double acc = bias.value[unit];
  for (std::size_t i = 0; i < in; ++i) acc += x[i] * weight.value[i * out + unit];
  return acc;
}

Tensor Dense::forward(const Tensor& x, DenseCache* cache) const {
  require_matrix(x, in_features(), "dense", weight.value.shape());
  const std::size_t n = x.dim(0);
  const std::size_t in = in_features();
  const std::size_t out = out_features();
  Tensor y({n, out});
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t j = 0; j < out; ++j) yr[j] = bias.value[j];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      if (xi == 0.0) continue;
      const double* w = weight.value.values().data() + (i * out);
      for (std::size_t j = 0; j < out; ++j) yr[j] += xi * w[j];
    }
    for (std::size_t j = 0; j < out; ++j) {
      switch (activation_) {
        case Activation::linear: break;
        case Activation::tanh: yr[j] = std::tanh(yr[j]); break;
        case Activation::sigmoid: yr[j] = sigmoid(yr[j]); break;
      }
    }
  }
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

Tensor Dense::backward(const Tensor& grad_output, const DenseCache& cache) {
  const std::size_t n = cache.input.dim(0);
  const std::size_t in = in_features();
  const std::size_t out = out_features();
  if (grad_output.shape() != cache.output.shape()) {
    fail(ErrorKind::shape, "dense backward: gradient shape " + shape_string(grad_output.shape()) +
                               " does not match output shape " + shape_string(cache.output.shape()));
  }
  Tensor pre_grad = grad_output;
  for (std::size_t k = 0; k < pre_grad.size(); ++k) {
    const double y = cache.output[k];
    switch (activation_) {
      case Activation::linear: break;
      case Activation::tanh: pre_grad[k] *= 1.0 - y * y; break;
      case Activation::sigmoid: pre_grad[k] *= y * (1.0 - y); break;
    }
  }
  Tensor dx({n, in});
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = cache.input.row(r);
    auto gr = pre_grad.row(r);
    auto dxr = dx.row(r);
    for (std::size_t j = 0; j < out; ++j) bias.grad[j] += gr[j];
    for (std::size_t i = 0; i < in; ++i) {
      double* dw = &weight.grad[i * out];
      const double* w = weight.value.values().data() + (i * out);
      const double xi = xr[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < out; ++j) {
        dw[j] += xi * gr[j];
        acc += gr[j] * w[j];
      }
      dxr[i] = acc;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM

Lstm::Lstm(const std::string& name, std::size_t input_size, std::size_t hidden_size, bool reverse)
    : w_input(name + ".w_input", {input_size, 4 * hidden_size}),
      w_hidden(name + ".w_hidden", {hidden_size, 4 * hidden_size}),
      bias(name + ".bias", {4 * hidden_size}),
      reverse_(reverse) {}

void Lstm::initialize(Rng& rng) {
  glorot_uniform(w_input.value, rng);
  glorot_uniform(w_hidden.value, rng);
  bias.value.fill(0.0);
}

Tensor Lstm::forward(const Tensor& x, const Mask& mask, LstmCache* cache) const {
  require_matrix(x, input_size(), "lstm", w_input.value.shape());
  require_mask(x, mask, "lstm");
  const std::size_t steps = x.dim(0);
  const std::size_t in = input_size();
  const std::size_t hidden = hidden_size();
  const std::size_t width = 4 * hidden;

  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < steps; ++t) {
    if (mask[t]) order.push_back(t);
  }
  if (reverse_) std::reverse(order.begin(), order.end());

  Tensor out({steps, hidden});
  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  c.order = order;
  c.input = x;
  c.gates = Tensor({steps, width});
  c.cell = Tensor({steps, hidden});
  c.cell_tanh = Tensor({steps, hidden});
  c.prev_cell = Tensor({steps, hidden});
  c.prev_hidden = Tensor({steps, hidden});

  std::vector<double> h(hidden, 0.0);
  std::vector<double> cell(hidden, 0.0);
  std::vector<double> a(width);
  for (std::size_t t : order) {
    for (std::size_t j = 0; j < width; ++j) a[j] = bias.value[j];
    auto xt = x.row(t);
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xt[i];
      if (xi == 0.0) continue;
      const double* w = w_input.value.values().data() + (i * width);
      for (std::size_t j = 0; j < width; ++j) a[j] += xi * w[j];
    }
    for (std::size_t i = 0; i < hidden; ++i) {
      const double hi = h[i];
      if (hi == 0.0) continue;
      const double* w = w_hidden.value.values().data() + (i * width);
      for (std::size_t j = 0; j < width; ++j) a[j] += hi * w[j];
    }
    auto gates = c.gates.row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      gates[j] = sigmoid(a[j]);
      gates[hidden + j] = sigmoid(a[hidden + j]);
      gates[2 * hidden + j] = std::tanh(a[2 * hidden + j]);
      gates[3 * hidden + j] = sigmoid(a[3 * hidden + j]);
    }
    auto prev_c = c.prev_cell.row(t);
    auto prev_h = c.prev_hidden.row(t);
    auto ct = c.cell.row(t);
    auto ctanh = c.cell_tanh.row(t);
    auto ot = out.row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      prev_c[j] = cell[j];
      prev_h[j] = h[j];
      cell[j] = gates[hidden + j] * cell[j] + gates[j] * gates[2 * hidden + j];
      ct[j] = cell[j];
      ctanh[j] = std::tanh(cell[j]);
      h[j] = gates[3 * hidden + j] * ctanh[j];
      ot[j] = h[j];
    }
  }
  return out;
}

Tensor Lstm::backward(const Tensor& grad_output, const LstmCache& c) {
  const std::size_t steps = c.input.dim(0);
  const std::size_t in = input_size();
  const std::size_t hidden = hidden_size();
  const std::size_t width = 4 * hidden;
  if (grad_output.rank() != 2 || grad_output.dim(0) != steps || grad_output.dim(1) != hidden) {
    fail(ErrorKind::shape, "lstm backward: gradient shape " + shape_string(grad_output.shape()) +
                               " does not match output shape " +
                               shape_string({steps, hidden}));
  }
  Tensor dx({steps, in});
  std::vector<double> dh_next(hidden, 0.0);
  std::vector<double> dc_next(hidden, 0.0);
  std::vector<double> da(width);
  for (auto it = c.order.rbegin(); it != c.order.rend(); ++it) {
    const std::size_t t = *it;
    auto gates = c.gates.row(t);
    auto prev_c = c.prev_cell.row(t);
    auto prev_h = c.prev_hidden.row(t);
    auto ctanh = c.cell_tanh.row(t);
    auto gout = grad_output.row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double ig = gates[j];
      const double fg = gates[hidden + j];
      const double gg = gates[2 * hidden + j];
      const double og = gates[3 * hidden + j];
      const double dh = gout[j] + dh_next[j];
      const double d_o = dh * ctanh[j];
      const double dc = dh * og * (1.0 - ctanh[j] * ctanh[j]) + dc_next[j];
      da[j] = dc * gg * ig * (1.0 - ig);
      da[hidden + j] = dc * prev_c[j] * fg * (1.0 - fg);
      da[2 * hidden + j] = dc * ig * (1.0 - gg * gg);
      da[3 * hidden + j] = d_o * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }
    for (std::size_t j = 0; j < width; ++j) bias.grad[j] += da[j];
    auto xt = c.input.row(t);
    auto dxt = dx.row(t);
    for (std::size_t i = 0; i < in; ++i) {
      double* dw = &w_input.grad[i * width];
      const double* w = w_input.value.values().data() + (i * width);
      const double xi = xt[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        dw[j] += xi * da[j];
        acc += da[j] * w[j];
      }
      dxt[i] = acc;
    }
    for (std::size_t i = 0; i < hidden; ++i) {
      double* dw = &w_hidden.grad[i * width];
      const double* w = w_hidden.value.values().data() + (i * width);
      const double hi = prev_h[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        dw[j] += hi * da[j];
        acc += da[j] * w[j];
      }
      dh_next[i] = acc;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BiLSTM

BiLstm::BiLstm(const std::string& name, std::size_t input_size, std::size_t hidden_size)
    : forward_(name + ".fw", input_size, hidden_size, false),
      backward_(name + ".bw", input_size, hidden_size, true) {}

void BiLstm::initialize(Rng& rng) {
  forward_.initialize(rng);
  backward_.initialize(rng);
}

std::vector<Parameter*> BiLstm::parameters() {
  auto out = forward_.parameters();
  for (auto* p : backward_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> BiLstm::parameters() const {
  auto out = forward_.parameters();
  for (const auto* p : backward_.parameters()) out.push_back(p);
  return out;
}

Tensor BiLstm::forward(const Tensor& x, const Mask& mask, BiLstmCache* cache) const {
  const Tensor fw = forward_.forward(x, mask, cache ? &cache->forward : nullptr);
  const Tensor bw = backward_.forward(x, mask, cache ? &cache->backward : nullptr);
  const std::size_t steps = x.dim(0);
  const std::size_t hidden = hidden_size();
  Tensor out({steps, 2 * hidden});
  for (std::size_t t = 0; t < steps; ++t) {
    auto o = out.row(t);
    auto f = fw.row(t);
    auto b = bw.row(t);
    std::copy(f.begin(), f.end(), o.begin());
    std::copy(b.begin(), b.end(), o.begin() + static_cast<std::ptrdiff_t>(hidden));
  }
  return out;
}

Tensor BiLstm::backward(const Tensor& grad_output, const BiLstmCache& cache) {
  const std::size_t steps = grad_output.dim(0);
  const std::size_t hidden = hidden_size();
  if (grad_output.dim(1) != 2 * hidden) {
    fail(ErrorKind::shape, "bilstm backward: gradient shape " + shape_string(grad_output.shape()) +
                               " does not match output width " + std::to_string(2 * hidden));
  }
  Tensor gf({steps, hidden});
  Tensor gb({steps, hidden});
  for (std::size_t t = 0; t < steps; ++t) {
    auto g = grad_output.row(t);
    std::copy(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(hidden), gf.row(t).begin());
    std::copy(g.begin() + static_cast<std::ptrdiff_t>(hidden), g.end(), gb.row(t).begin());
  }
  Tensor dx = forward_.backward(gf, cache.forward);
  const Tensor dxb = backward_.backward(gb, cache.backward);
  for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += dxb[k];
  return dx;
}

MaskedBatch BiLstm::forward(const MaskedBatch& batch) const {
  MaskedBatch out(batch.batch_size(), batch.time_steps(), output_size());
  out.mask = batch.mask;
  const std::size_t stride = batch.time_steps() * output_size();
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const Tensor h = forward(batch.sequence(b), batch.sequence_mask(b));
    std::copy(h.values().begin(), h.values().end(),
              out.values.values().begin() + static_cast<std::ptrdiff_t>(b * stride));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Softmax, attention, pooling

std::vector<double> masked_softmax(std::span<const double> scores, const Mask& mask) {
  if (mask.size() != scores.size()) {
    fail(ErrorKind::shape, "masked_softmax: mask length " + std::to_string(mask.size()) +
                               " does not match " + std::to_string(scores.size()) + " scores");
  }
  double max_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (!mask[t]) continue;
    any = true;
    max_score = std::max(max_score, scores[t]);
  }
  if (!any) fail(ErrorKind::numeric, "masked_softmax: every position is masked");
  std::vector<double> out(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (!mask[t]) continue;
    out[t] = std::exp(scores[t] - max_score);
    total += out[t];
  }
  for (double& v : out) v /= total;
  return out;
}

Tensor masked_softmax(const Tensor& scores, const Mask& mask) {
  if (scores.rank() != 2 || mask.size() != scores.size()) {
    fail(ErrorKind::shape, "masked_softmax: scores " + shape_string(scores.shape()) +
                               " and mask of length " + std::to_string(mask.size()));
  }
  const std::size_t cols = scores.dim(1);
  Tensor out(scores.shape());
  for (std::size_t r = 0; r < scores.dim(0); ++r) {
    const Mask row_mask(mask.begin() + static_cast<std::ptrdiff_t>(r * cols),
                        mask.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    const auto row = masked_softmax(scores.row(r), row_mask);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

AdditiveAttention::AdditiveAttention(const std::string& name, std::size_t input_size,
                                     std::size_t attention_size)
    : weight(name + ".weight", {input_size, attention_size}),
      bias(name + ".bias", {attention_size}),
      context(name + ".context", {attention_size}) {}

void AdditiveAttention::initialize(Rng& rng) {
  glorot_uniform(weight.value, rng);
  bias.value.fill(0.0);
  glorot_uniform(context.value, rng);
}

AttentionResult AdditiveAttention::forward(const Tensor& h, const Mask& mask,
                                           AttentionCache* cache) const {
  require_matrix(h, input_size(), "attention", weight.value.shape());
  require_mask(h, mask, "attention");
  const std::size_t steps = h.dim(0);
  const std::size_t features = input_size();
  const std::size_t width = attention_size();
  Tensor keys({steps, width});
  std::vector<double> scores(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    if (!mask[t]) continue;
    auto ht = h.row(t);
    auto zt = keys.row(t);
    for (std::size_t a = 0; a < width; ++a) zt[a] = bias.value[a];
    for (std::size_t f = 0; f < features; ++f) {
      const double hf = ht[f];
      const double* w = weight.value.values().data() + (f * width);
      for (std::size_t a = 0; a < width; ++a) zt[a] += hf * w[a];
    }
    double score = 0.0;
    for (std::size_t a = 0; a < width; ++a) {
      zt[a] = std::tanh(zt[a]);
      score += zt[a] * context.value[a];
    }
    scores[t] = score;
  }
  AttentionResult result;
  result.weights = masked_softmax(scores, mask);
  result.pooled = average_pool(h, result.weights, mask);
  if (cache) {
    cache->input = h;
    cache->keys = std::move(keys);
    cache->weights = result.weights;
    cache->mask = mask;
  }
  return result;
}

Tensor AdditiveAttention::backward(std::span<const double> grad_pooled, const AttentionCache& c) {
  const std::size_t steps = c.input.dim(0);
  const std::size_t features = input_size();
  const std::size_t width = attention_size();
  if (grad_pooled.size() != features) {
    fail(ErrorKind::shape, "attention backward: gradient of length " +
                               std::to_string(grad_pooled.size()) + " for " +
                               std::to_string(features) + " features");
  }
  Tensor dh = average_pool_backward(grad_pooled, c.weights, c.mask, steps);

  // d alpha_t = g . h_t, then through the softmax.
  std::vector<double> dalpha(steps, 0.0);
  double weighted = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    if (!c.mask[t]) continue;
    auto ht = c.input.row(t);
    double acc = 0.0;
    for (std::size_t f = 0; f < features; ++f) acc += grad_pooled[f] * ht[f];
    dalpha[t] = acc;
    weighted += c.weights[t] * acc;
  }
  std::vector<double> dpre(width);
  for (std::size_t t = 0; t < steps; ++t) {
    if (!c.mask[t]) continue;
    const double dscore = c.weights[t] * (dalpha[t] - weighted);
    auto zt = c.keys.row(t);
    for (std::size_t a = 0; a < width; ++a) {
      context.grad[a] += dscore * zt[a];
      dpre[a] = dscore * context.value[a] * (1.0 - zt[a] * zt[a]);
      bias.grad[a] += dpre[a];
    }
    auto ht = c.input.row(t);
    auto dht = dh.row(t);
    for (std::size_t f = 0; f < features; ++f) {
      double* dw = &weight.grad[f * width];
      const double* w = weight.value.values().data() + (f * width);
      double acc = 0.0;
      for (std::size_t a = 0; a < width; ++a) {
        dw[a] += ht[f] * dpre[a];
        acc += dpre[a] * w[a];
      }
      dht[f] += acc;
    }
  }
  return dh;
}

Tensor average_pool(const Tensor& h, std::span<const double> weights, const Mask& mask) {
  if (h.rank() != 2 || weights.size() != h.dim(0)) {
    fail(ErrorKind::shape, "average_pool: " + std::to_string(weights.size()) +
                               " weights for input of shape " + shape_string(h.shape()));
  }
  require_mask(h, mask, "average_pool");
  double total = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (!mask[t]) continue;
    if (weights[t] < 0.0 || !std::isfinite(weights[t])) {
      fail(ErrorKind::numeric, "average_pool: weight " + std::to_string(t) +
                                   " is negative or non-finite");
    }
    total += weights[t];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::numeric, "average_pool: weights over unmasked steps sum to " +
                                 std::to_string(total) + ", not 1");
  }
  const std::size_t features = h.dim(1);
  Tensor pooled({features});
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (!mask[t]) continue;
    auto ht = h.row(t);
    for (std::size_t f = 0; f < features; ++f) pooled[f] += weights[t] * ht[f];
  }
  return pooled;
}

Tensor average_pool_backward(std::span<const double> grad_pooled, std::span<const double> weights,
                             const Mask& mask, std::size_t time_steps) {
  const std::size_t features = grad_pooled.size();
  Tensor dh({time_steps, features});
  for (std::size_t t = 0; t < time_steps; ++t) {
    if (!mask[t]) continue;
    auto row = dh.row(t);
    for (std::size_t f = 0; f < features; ++f) row[f] = weights[t] * grad_pooled[f];
  }
  return dh;
}

}  // namespace hierseg::nn
