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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/corpus.hpp"
#include "hierseg/metrics.hpp"
#include "hierseg/nn/checkpoint.hpp"
#include "hierseg/nn/layers.hpp"
#include "hierseg/nn/loss.hpp"
#include "hierseg/nn/train.hpp"
#include "hierseg/sequence.hpp"

namespace hierseg {

enum class Task { regression, classification };

const char* to_string(Task task) noexcept;
Task task_from_string(const std::string& name);

struct PredictorConfig {
  std::size_t hidden_size = 32;
  std::size_t attention_size = 32;
  std::size_t max_segments = 40;  // longer sessions keep their first max_segments
  Task task = Task::regression;

  void validate() const;
  nlohmann::json to_json() const;
  static PredictorConfig from_json(const nlohmann::json& j);
};

struct SessionPrediction {
  std::string session_id;
  double output = 0.0;            // head pre-activation
  double score_normalized = 0.0;  // regression output
  double probability_high = 0.0;  // classification output
  std::vector<double> attention;  // one weight per padded position
  std::size_t n_segments = 0;     // real segments used

  nlohmann::json to_json(const ScoreScale* scale = nullptr) const;
};

/// BiLSTM over segment embeddings, additive attention pooling, dense head
/// (linear for regression, sigmoid for classification).
class PredictorModel {
 public:
  PredictorModel() = default;
  PredictorModel(std::size_t input_size, PredictorConfig config, std::uint64_t seed);

  const PredictorConfig& config() const { return config_; }
  std::size_t input_size() const { return bilstm_.input_size(); }

  SessionPrediction predict(const SessionEmbeddings& session) const;
  /// Forward pass on an already padded [max_segments, d] sequence.
  SessionPrediction predict_padded(const nn::Tensor& x, const nn::Mask& mask) const;

  /// Loss of one padded example. `target` is the normalized score for
  /// regression and 0 / 1 for classification.
  double loss(const nn::Tensor& x, const nn::Mask& mask, double target, const nn::ClassWeights& weights) const;
  double loss_and_grad(const nn::Tensor& x, const nn::Mask& mask, double target,
                       const nn::ClassWeights& weights, double scale);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  nn::Checkpoint to_checkpoint() const;
  static PredictorModel from_checkpoint(const nn::Checkpoint& checkpoint);

  /// Pads or truncates to max_segments.
  void pad(const SessionEmbeddings& session, nn::Tensor& x, nn::Mask& mask) const;

 private:
  PredictorConfig config_;
  nn::BiLstm bilstm_;
  nn::AdditiveAttention attention_;
  nn::Dense head_;
};

struct PredictorTraining {
  PredictorModel model;
  nn::TrainHistory history;
  nn::ClassWeights class_weights;
};

/// `targets` are normalized scores (regression) or 0 / 1 labels
/// (classification), one per session.
PredictorTraining train_predictor(std::span<const SessionEmbeddings> sessions, std::span<const double> targets,
                                  const PredictorConfig& config, const nn::TrainConfig& train);

std::vector<SessionPrediction> predict_sessions(const PredictorModel& model,
                                                std::span<const SessionEmbeddings> sessions);

/// RMSE / MAE in original score units for regression, macro-F1 at
/// probability 0.5 for classification. `scores` are the true raw scores.
MetricsRecord evaluate_predictions(std::span<const SessionPrediction> predictions, std::span<const int> scores,
                                   Task task, const ScoreScale& scale);

}  // namespace hierseg
