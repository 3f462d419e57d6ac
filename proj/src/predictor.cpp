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

#include "hierseg/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "hierseg/error.hpp"
#include "hierseg/log.hpp"
#include "hierseg/rng.hpp"

namespace hierseg {

using nlohmann::json;

const char* to_string(Task task) noexcept {
  return task == Task::regression ? "regression" : "classification";
}

Task task_from_string(const std::string& name) {
  if (name == "regression") return Task::regression;
  if (name == "classification") return Task::classification;
  fail(ErrorKind::invalid_argument, "unknown task '" + name + "' (expected regression or classification)");
}

void PredictorConfig::validate() const {
  if (hidden_size == 0 || attention_size == 0) fail(ErrorKind::validation, "predictor sizes must be positive");
  if (max_segments == 0) fail(ErrorKind::validation, "max_segments must be positive");
}

json PredictorConfig::to_json() const {
  return {{"hidden_size", hidden_size},
          {"attention_size", attention_size},
          {"max_segments", max_segments},
          {"task", to_string(task)}};
}

PredictorConfig PredictorConfig::from_json(const json& j) {
  PredictorConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.attention_size = j.at("attention_size").get<std::size_t>();
  c.max_segments = j.at("max_segments").get<std::size_t>();
  c.task = task_from_string(j.at("task").get<std::string>());
  c.validate();
  return c;
}

json SessionPrediction::to_json(const ScoreScale* scale) const {
  json j{{"session_id", session_id}, {"score", nullptr}, {"probability_high", nullptr}};
  if (scale) {
    j["score"] = unrescale(score_normalized, *scale);
  } else {
    j["score"] = score_normalized;
  }
  j["probability_high"] = probability_high;
  j["attention"] = std::vector<double>(attention.begin(), attention.begin() + static_cast<std::ptrdiff_t>(n_segments));
  return j;
}

PredictorModel::PredictorModel(std::size_t input_size, PredictorConfig config, std::uint64_t seed)
    : config_(config),
      bilstm_("predictor.bilstm", input_size, config.hidden_size),
      attention_("predictor.attention", 2 * config.hidden_size, config.attention_size),
      head_("predictor.head", 2 * config.hidden_size, 1,
            config.task == Task::regression ? nn::Activation::linear : nn::Activation::sigmoid) {
  config_.validate();
  if (input_size == 0) fail(ErrorKind::validation, "predictor input size must be positive");
  Rng rng(mix_seed(seed, 0x9ed1c7));
  bilstm_.initialize(rng);
  attention_.initialize(rng);
  head_.initialize(rng);
}

void PredictorModel::pad(const SessionEmbeddings& session, nn::Tensor& x, nn::Mask& mask) const {
  if (session.size() == 0) fail(ErrorKind::validation, "session " + session.session_id + " has no segments");
  if (session.dim() != input_size()) {
    fail(ErrorKind::shape, "session " + session.session_id + ": embedding dimension " +
                               std::to_string(session.dim()) + " does not match predictor input " +
                               std::to_string(input_size()));
  }
  pad_sequence(session.segments, config_.max_segments, x, mask);
}

SessionPrediction PredictorModel::predict_padded(const nn::Tensor& x, const nn::Mask& mask) const {
  const nn::Tensor h = bilstm_.forward(x, mask);
  const nn::AttentionResult att = attention_.forward(h, mask);
  SessionPrediction p;
  p.output = head_.linear_output(att.pooled.values());
  p.attention = att.weights;
  p.n_segments = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  if (config_.task == Task::regression) {
    p.score_normalized = p.output;
  } else {
    p.probability_high = nn::sigmoid(p.output);
  }
  return p;
}

SessionPrediction PredictorModel::predict(const SessionEmbeddings& session) const {
  nn::Tensor x;
  nn::Mask mask;
  pad(session, x, mask);
  SessionPrediction p = predict_padded(x, mask);
  p.session_id = session.session_id;
  return p;
}

double PredictorModel::loss(const nn::Tensor& x, const nn::Mask& mask, double target,
                            const nn::ClassWeights& weights) const {
  const SessionPrediction p = predict_padded(x, mask);
  if (config_.task == Task::regression) return (p.output - target) * (p.output - target);
  return nn::weighted_cross_entropy(p.output, target > 0.5, weights).value;
}

double PredictorModel::loss_and_grad(const nn::Tensor& x, const nn::Mask& mask, double target,
                                     const nn::ClassWeights& weights, double scale) {
  nn::BiLstmCache lstm_cache;
  nn::AttentionCache att_cache;
  const nn::Tensor h = bilstm_.forward(x, mask, &lstm_cache);
  const nn::AttentionResult att = attention_.forward(h, mask, &att_cache);
  const double out = head_.linear_output(att.pooled.values());

  double value = 0.0;
  double d_out = 0.0;
  if (config_.task == Task::regression) {
    value = (out - target) * (out - target);
    d_out = 2.0 * (out - target);
  } else {
    const nn::ScalarLoss l = nn::weighted_cross_entropy(out, target > 0.5, weights);
    value = l.value;
    d_out = l.grad;
  }
  // The loss gradient is taken with respect to the pre-activation, so the
  // head is differentiated as a linear layer.
  auto& w = head_.weight;
  const std::size_t f = att.pooled.size();
  std::vector<double> d_pooled(f);
  for (std::size_t k = 0; k < f; ++k) {
    w.grad[k] += scale * d_out * att.pooled[k];
    d_pooled[k] = scale * d_out * w.value[k];
  }
  head_.bias.grad[0] += scale * d_out;
  const nn::Tensor dh = attention_.backward(d_pooled, att_cache);
  bilstm_.backward(dh, lstm_cache);
  return value;
}

std::vector<nn::Parameter*> PredictorModel::parameters() {
  std::vector<nn::Parameter*> out = bilstm_.parameters();
  for (auto* p : attention_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> PredictorModel::parameters() const {
  std::vector<const nn::Parameter*> out = bilstm_.parameters();
  for (const auto* p : attention_.parameters()) out.push_back(p);
  for (const auto* p : head_.parameters()) out.push_back(p);
  return out;
}

nn::Checkpoint PredictorModel::to_checkpoint() const {
  const auto params = parameters();
  nn::Checkpoint c = nn::make_checkpoint("predictor", params);
  c.extra["config"] = config_.to_json();
  c.extra["input_size"] = input_size();
  return c;
}

PredictorModel PredictorModel::from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.model_kind != "predictor") {
    fail(ErrorKind::validation, "expected a predictor checkpoint, got '" + checkpoint.model_kind + "'");
  }
  PredictorConfig config;
  std::size_t input = 0;
  try {
    config = PredictorConfig::from_json(checkpoint.extra.at("config"));
    input = checkpoint.extra.at("input_size").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("predictor checkpoint: ") + e.what());
  }
  PredictorModel model(input, config, 0);
  checkpoint.load_into(model.parameters());
  return model;
}

PredictorTraining train_predictor(std::span<const SessionEmbeddings> sessions, std::span<const double> targets,
                                  const PredictorConfig& config, const nn::TrainConfig& train) {
  if (sessions.empty()) fail(ErrorKind::validation, "train_predictor: no sessions");
  if (sessions.size() != targets.size()) {
    fail(ErrorKind::validation, "train_predictor: " + std::to_string(sessions.size()) + " sessions but " +
                                    std::to_string(targets.size()) + " labels");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i])) {
      fail(ErrorKind::validation, "session " + sessions[i].session_id + " has no usable label");
    }
  }
  PredictorTraining result{PredictorModel(sessions.front().dim(), config, train.seed), {}, {}};
  PredictorModel& model = result.model;

  std::size_t truncated = 0;
  std::vector<nn::Tensor> xs(sessions.size());
  std::vector<nn::Mask> masks(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    model.pad(sessions[i], xs[i], masks[i]);
    if (sessions[i].size() > config.max_segments) ++truncated;
  }
  if (truncated > 0) {
    log::warn(std::to_string(truncated) + " sessions exceed max_segments " + std::to_string(config.max_segments) +
              " and were truncated");
  }

  if (config.task == Task::classification) {
    std::size_t high = 0;
    for (double t : targets) {
      if (t != 0.0 && t != 1.0) fail(ErrorKind::validation, "classification labels must be 0 or 1");
      high += t == 1.0;
    }
    result.class_weights = nn::ClassWeights::from_counts(targets.size() - high, high);
  }

  nn::Objective objective;
  objective.loss = [&](std::size_t i) { return model.loss(xs[i], masks[i], targets[i], result.class_weights); };
  objective.loss_and_grad = [&](std::size_t i, double scale) {
    return model.loss_and_grad(xs[i], masks[i], targets[i], result.class_weights, scale);
  };
  const auto params = model.parameters();
  result.history = nn::fit(params, sessions.size(), objective, train);
  return result;
}

std::vector<SessionPrediction> predict_sessions(const PredictorModel& model,
                                                std::span<const SessionEmbeddings> sessions) {
  std::vector<SessionPrediction> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(model.predict(s));
  return out;
}

MetricsRecord evaluate_predictions(std::span<const SessionPrediction> predictions, std::span<const int> scores,
                                   Task task, const ScoreScale& scale) {
  if (predictions.empty()) fail(ErrorKind::validation, "evaluation set is empty");
  if (predictions.size() != scores.size()) fail(ErrorKind::shape, "one score per prediction is required");
  if (task == Task::regression) {
    std::vector<double> pred, truth;
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      bool was_clamped = false;
      pred.push_back(unrescale(predictions[i].score_normalized, scale, &was_clamped));
      clamped += was_clamped;
      truth.push_back(scores[i]);
    }
    MetricsRecord r = regression_metrics(pred, truth);
    r.n_clamped = clamped;
    if (clamped > 0) log::warn(std::to_string(clamped) + " predictions clamped into [0, " + std::to_string(scale.full_scale) + "]");
    return r;
  }
  std::vector<Binary> pred, truth;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    pred.push_back(predictions[i].probability_high >= 0.5 ? Binary::high : Binary::low);
    truth.push_back(binarize(scores[i], scale));
  }
  return classification_metrics(pred, truth);
}

}  // namespace hierseg
