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

#include "hierseg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "hierseg/error.hpp"
#include "hierseg/log.hpp"
#include "hierseg/metrics.hpp"

namespace hierseg {

using nlohmann::json;

Document session_document(const Session& session) {
  Document doc;
  for (const auto& u : session.utterances) doc.insert(doc.end(), u.tokens.begin(), u.tokens.end());
  return doc;
}

// ---------------------------------------------------------------------------
// tf-idf

TfidfModel TfidfModel::fit(std::span<const Document> documents) {
  if (documents.empty()) fail(ErrorKind::invalid_argument, "tf-idf needs at least one document");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::vector<std::string> distinct(doc.begin(), doc.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (const auto& t : distinct) ++df[t];
  }
  TfidfModel m;
  m.n_documents_ = documents.size();
  const double n = static_cast<double>(documents.size());
  for (const auto& [token, count] : df) {
    m.columns_.emplace(token, m.vocabulary_.size());
    m.vocabulary_.push_back(token);
    m.document_frequency_.push_back(count);
    m.idf_.push_back(std::log(n / static_cast<double>(count)));
  }
  return m;
}

std::optional<std::size_t> TfidfModel::column(const std::string& token) const {
  const auto it = columns_.find(token);
  if (it == columns_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::transform(const Document& document) const {
  if (document.empty()) {
    log::warn("tf-idf transform of an empty document");
    return {};
  }
  std::map<std::size_t, std::size_t> counts;
  for (const auto& t : document) {
    if (const auto c = column(t)) ++counts[*c];
  }
  SparseVector out;
  const double len = static_cast<double>(document.size());
  for (const auto& [c, count] : counts) out.emplace_back(c, static_cast<double>(count) / len * idf_[c]);
  return out;
}

std::vector<double> TfidfModel::transform_dense(const Document& document) const {
  std::vector<double> dense(vocabulary_.size(), 0.0);
  for (const auto& [c, v] : transform(document)) dense[c] = v;
  return dense;
}

nn::Tensor TfidfModel::transform_all(std::span<const Document> documents) const {
  nn::Tensor x({documents.size(), vocabulary_.size()});
  for (std::size_t i = 0; i < documents.size(); ++i) {
    auto row = x.row(i);
    for (const auto& [c, v] : transform(documents[i])) row[c] = v;
  }
  return x;
}

json TfidfModel::to_json() const {
  return {{"n_documents", n_documents_}, {"vocabulary", vocabulary_}, {"document_frequency", document_frequency_}};
}

TfidfModel TfidfModel::from_json(const json& j) {
  TfidfModel m;
  try {
    m.n_documents_ = j.at("n_documents").get<std::size_t>();
    m.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
    m.document_frequency_ = j.at("document_frequency").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("tf-idf model: ") + e.what());
  }
  if (m.vocabulary_.size() != m.document_frequency_.size()) {
    fail(ErrorKind::validation, "tf-idf model: vocabulary and document frequencies differ in length");
  }
  for (std::size_t c = 0; c < m.vocabulary_.size(); ++c) {
    const std::size_t df = m.document_frequency_[c];
    if (df == 0 || df > m.n_documents_) fail(ErrorKind::validation, "tf-idf model: bad document frequency");
    m.columns_.emplace(m.vocabulary_[c], c);
    m.idf_.push_back(std::log(static_cast<double>(m.n_documents_) / static_cast<double>(df)));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Linear models

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    fail(ErrorKind::shape, "linear model expects " + std::to_string(weights.size()) + " features, got " +
                               std::to_string(x.size()));
  }
  double s = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

json LinearModel::to_json() const { return {{"weights", weights}, {"intercept", intercept}}; }

LinearModel LinearModel::from_json(const json& j) {
  LinearModel m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("linear model: ") + e.what());
  }
  return m;
}

namespace {

Eigen::MatrixXd to_eigen(const nn::Tensor& x) {
  Eigen::MatrixXd m(x.dim(0), x.dim(1));
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < x.dim(1); ++j) m(i, j) = x.at(i, j);
  }
  return m;
}

}  // namespace

LinearModel train_linear_regression(const nn::Tensor& features, std::span<const double> targets, double lambda,
                                    bool fit_intercept) {
  if (features.rank() != 2) fail(ErrorKind::shape, "features must be a matrix, got " + nn::shape_string(features.shape()));
  const std::size_t n = features.dim(0);
  const std::size_t p = features.dim(1);
  if (n == 0 || n != targets.size()) {
    fail(ErrorKind::shape, "features have " + std::to_string(n) + " rows but there are " +
                               std::to_string(targets.size()) + " targets");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::invalid_argument, "ridge lambda must be >= 0");

  Eigen::MatrixXd x = to_eigen(features);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(p));
  double y_mean = 0.0;
  if (fit_intercept) {
    x_mean = x.colwise().mean();
    y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;
  }
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = x.transpose() * y;

  LinearModel model;
  model.weights.assign(p, 0.0);
  if (p > 0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
    const bool singular = ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13 ||
                          ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * scale;
    if (singular) {
      if (lambda == 0.0) fail(ErrorKind::numeric, "normal equations are singular; use a ridge penalty lambda > 0");
      fail(ErrorKind::numeric, "normal equations are numerically singular");
    }
    const Eigen::VectorXd w = ldlt.solve(rhs);
    for (std::size_t j = 0; j < p; ++j) model.weights[j] = w(static_cast<Eigen::Index>(j));
  }
  model.intercept = fit_intercept ? y_mean - (x_mean * Eigen::Map<const Eigen::VectorXd>(
                                                          model.weights.data(), static_cast<Eigen::Index>(p)))(0)
                                  : 0.0;
  if (p == 0 && fit_intercept) model.intercept = y_mean;
  return model;
}

LinearModel train_linear_classifier(const nn::Tensor& features, std::span<const Binary> labels,
                                    const nn::ClassWeights& weights, const HingeConfig& config) {
  if (features.rank() != 2 || features.dim(0) != labels.size() || labels.empty()) {
    fail(ErrorKind::shape, "classifier needs one label per feature row");
  }
  if (!(config.lambda >= 0.0) || config.iterations == 0 || !(config.step0 > 0.0)) {
    fail(ErrorKind::invalid_argument, "invalid hinge classifier configuration");
  }
  const std::size_t n = features.dim(0);
  const std::size_t p = features.dim(1);
  std::vector<double> sign(n), cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool high = labels[i] == Binary::high;
    sign[i] = high ? 1.0 : -1.0;
    cost[i] = high ? weights.high : weights.low;
  }

  LinearModel current{std::vector<double>(p, 0.0), 0.0};
  LinearModel best = current;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<double> grad_w(p);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t <= config.iterations; ++t) {
    double objective = 0.0;
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = features.row(i);
      const double margin = sign[i] * current.decision(row);
      if (margin < 1.0) {
        objective += cost[i] * (1.0 - margin) * inv_n;
        for (std::size_t j = 0; j < p; ++j) grad_w[j] -= cost[i] * sign[i] * row[j] * inv_n;
        grad_b -= cost[i] * sign[i] * inv_n;
      }
    }
    double norm2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      norm2 += current.weights[j] * current.weights[j];
      grad_w[j] += config.lambda * current.weights[j];
    }
    objective += 0.5 * config.lambda * norm2;
    if (objective < best_objective) {
      best_objective = objective;
      best = current;
    }
    if (t == config.iterations) break;
    const double step = config.step0 / std::sqrt(static_cast<double>(t + 1));
    for (std::size_t j = 0; j < p; ++j) current.weights[j] -= step * grad_w[j];
    current.intercept -= step * grad_b;
  }
  return best;
}

Binary classify(const LinearModel& model, std::span<const double> x) {
  return model.decision(x) >= 0.0 ? Binary::high : Binary::low;
}

// ---------------------------------------------------------------------------
// Backward selection

std::vector<std::string> backward_selection(const std::vector<std::string>& words,
                                            const std::vector<std::vector<double>>& columns,
                                            std::span<const double> targets, std::size_t k_keep, double lambda) {
  if (k_keep == 0) fail(ErrorKind::invalid_argument, "k_keep must be positive");
  if (words.size() != columns.size()) fail(ErrorKind::shape, "one column per word is required");
  if (words.size() < k_keep) {
    fail(ErrorKind::invalid_argument, "k_keep " + std::to_string(k_keep) + " exceeds the " +
                                          std::to_string(words.size()) + " candidate words");
  }
  for (const auto& c : columns) {
    if (c.size() != targets.size()) fail(ErrorKind::shape, "column length differs from the number of targets");
  }
  std::vector<std::size_t> kept(words.size());
  std::iota(kept.begin(), kept.end(), 0);
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return words[a] < words[b]; });

  constexpr std::size_t folds = 5;
  if (kept.size() > k_keep && targets.size() < folds) {
    fail(ErrorKind::invalid_argument, "backward selection needs at least 5 rows");
  }

  // Pooled out-of-fold RMSE; row r belongs to fold r % 5 and each fold's
  // columns are standardized on the other folds.
  auto validation_rmse = [&](const std::vector<std::size_t>& cols) {
    std::vector<double> pred, truth;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> fit_rows, val_rows;
      for (std::size_t r = 0; r < targets.size(); ++r) (r % folds == f ? val_rows : fit_rows).push_back(r);
      std::vector<double> mean(cols.size(), 0.0), sd(cols.size(), 0.0);
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto& c = columns[cols[j]];
        for (std::size_t r : fit_rows) mean[j] += c[r];
        mean[j] /= static_cast<double>(fit_rows.size());
        for (std::size_t r : fit_rows) sd[j] += (c[r] - mean[j]) * (c[r] - mean[j]);
        sd[j] = std::sqrt(sd[j] / static_cast<double>(fit_rows.size()));
      }
      auto z = [&](std::size_t j, std::size_t r) {
        return sd[j] > 0.0 ? (columns[cols[j]][r] - mean[j]) / sd[j] : 0.0;
      };
      nn::Tensor x({fit_rows.size(), cols.size()});
      std::vector<double> y;
      for (std::size_t i = 0; i < fit_rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) x.at(i, j) = z(j, fit_rows[i]);
        y.push_back(targets[fit_rows[i]]);
      }
      const LinearModel m = train_linear_regression(x, y, lambda);
      std::vector<double> row(cols.size());
      for (std::size_t r : val_rows) {
        for (std::size_t j = 0; j < cols.size(); ++j) row[j] = z(j, r);
        pred.push_back(m.decision(row));
        truth.push_back(targets[r]);
      }
    }
    return rmse(pred, truth);
  };

  while (kept.size() > k_keep) {
    std::size_t drop = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      std::vector<std::size_t> trial;
      for (std::size_t j = 0; j < kept.size(); ++j) {
        if (j != i) trial.push_back(kept[j]);
      }
      const double score = validation_rmse(trial);
      if (score < best) {
        best = score;
        drop = i;
      }
    }
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  std::vector<std::string> out;
  for (std::size_t c : kept) out.push_back(words[c]);
  return out;
}

}  // namespace hierseg
