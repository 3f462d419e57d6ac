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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierseg/error.hpp"
#include "hierseg/nn/tensor.hpp"
#include "hierseg/rng.hpp"

namespace hierseg::test {

/// Relative error with a small floor so near-zero gradients compare absolutely.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Largest relative error between `analytic` and central differences of
/// `loss` with respect to every entry of `values`.
inline double max_fd_error(std::span<double> values, std::span<const double> analytic,
                           const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double saved = values[k];
    values[k] = saved + h;
    const double up = loss();
    values[k] = saved - h;
    const double down = loss();
    values[k] = saved;
    worst = std::max(worst, relative_error(analytic[k], (up - down) / (2.0 * h)));
  }
  return worst;
}

/// Finite-difference check over a set of parameters whose gradients have
/// already been accumulated by the caller.
inline double max_param_fd_error(const std::vector<nn::Parameter*>& params,
                                 const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (nn::Parameter* p : params) {
    const std::vector<double> analytic(p->grad.storage());
    worst = std::max(worst, max_fd_error(p->value.values(), analytic, loss, h));
  }
  return worst;
}

inline nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Direct LSTM recurrence over rows in the given order; gate blocks i, f, g, o.
inline std::vector<std::vector<double>> lstm_oracle(const std::vector<std::vector<double>>& x,
                                             const nn::Parameter& wi, const nn::Parameter& wh,
                                             const nn::Parameter& b, bool reverse) {
  const std::size_t H = wh.value.dim(0);
  const std::size_t T = x.size();
  std::vector<std::vector<double>> out(T, std::vector<double>(H, 0.0));
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    std::vector<double> a(4 * H);
    for (std::size_t j = 0; j < 4 * H; ++j) {
      a[j] = b.value[j];
      for (std::size_t i = 0; i < x[t].size(); ++i) a[j] += x[t][i] * wi.value.at(i, j);
      for (std::size_t i = 0; i < H; ++i) a[j] += h[i] * wh.value.at(i, j);
    }
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = sig(a[j]), fg = sig(a[H + j]), gg = std::tanh(a[2 * H + j]), og = sig(a[3 * H + j]);
      c[j] = fg * c[j] + ig * gg;
      h[j] = og * std::tanh(c[j]);
    }
    out[t] = h;
  }
  return out;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hierseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <class F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a hierseg::Error");
}

}  // namespace hierseg::test
