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

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/corpus.hpp"
#include "hierseg/nn/loss.hpp"
#include "hierseg/nn/tensor.hpp"

namespace hierseg {

using Document = std::vector<std::string>;
using SparseVector = std::vector<std::pair<std::size_t, double>>;  // (column, value), columns ascending

/// All utterance tokens of a session, in order.
Document session_document(const Session& session);

/// tf = count / document length, idf = ln(N / df), feature = tf * idf.
/// Columns follow the lexicographic order of the vocabulary.
class TfidfModel {
 public:
  static TfidfModel fit(std::span<const Document> documents);

  /// Tokens unseen at fit time are dropped; an empty document gives a zero
  /// vector with a warning.
  SparseVector transform(const Document& document) const;
  std::vector<double> transform_dense(const Document& document) const;
  /// [documents, vocabulary] dense feature matrix.
  nn::Tensor transform_all(std::span<const Document> documents) const;

  std::optional<std::size_t> column(const std::string& token) const;
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<std::size_t>& document_frequency() const { return document_frequency_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t n_documents() const { return n_documents_; }

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::size_t> columns_;
  std::vector<std::size_t> document_frequency_;
  std::vector<double> idf_;
  std::size_t n_documents_ = 0;
};

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;

  double decision(std::span<const double> x) const;
  nlohmann::json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);
};

/// Ridge regression. With an intercept the system is solved on centered data
/// so the intercept is not penalized; without one it solves
/// (X^T X + lambda I) w = X^T y.
LinearModel train_linear_regression(const nn::Tensor& features, std::span<const double> targets, double lambda,
                                    bool fit_intercept = true);

struct HingeConfig {
  double lambda = 1e-3;
  std::size_t iterations = 1000;
  double step0 = 0.5;  // step size at iteration t is step0 / sqrt(t)
};

/// Class-weighted hinge loss plus (lambda/2)|w|^2, minimized by full-batch
/// subgradient descent. Returns the iterate with the lowest objective.
LinearModel train_linear_classifier(const nn::Tensor& features, std::span<const Binary> labels,
                                    const nn::ClassWeights& weights, const HingeConfig& config = {});

Binary classify(const LinearModel& model, std::span<const double> x);

/// Greedy backward elimination: repeatedly drops the word whose removal gives
/// the lowest ridge validation RMSE until `k_keep` remain. The RMSE is pooled
/// over 5 folds (row r is held out in fold r % 5) with columns standardized on
/// each fold's fitting rows. Ties drop the lexicographically smallest word.
/// Returns the kept words sorted.
std::vector<std::string> backward_selection(const std::vector<std::string>& words,
                                            const std::vector<std::vector<double>>& columns,
                                            std::span<const double> targets, std::size_t k_keep,
                                            double lambda = 1.0);

}  // namespace hierseg
