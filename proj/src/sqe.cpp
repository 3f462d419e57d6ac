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

#include "hierseg/sqe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "hierseg/log.hpp"
#include "hierseg/rng.hpp"

namespace hierseg {

using nlohmann::json;

const char* to_string(SqeMode mode) noexcept { return mode == SqeMode::even ? "even" : "uneven"; }

SqeMode sqe_mode_from_string(const std::string& name) {
  if (name == "even") return SqeMode::even;
  if (name == "uneven") return SqeMode::uneven;
  fail(ErrorKind::invalid_argument, "unknown SQE mode '" + name + "' (expected even or uneven)");
}

void SqeConfig::validate() const {
  if (hidden_size == 0 || attention_size == 0) fail(ErrorKind::validation, "SQE sizes must be positive");
}

json SqeConfig::to_json() const {
  return {{"hidden_size", hidden_size},
          {"attention_size", attention_size},
          {"mode", to_string(mode)},
          {"head_activation", nn::to_string(head_activation)}};
}

SqeConfig SqeConfig::from_json(const json& j) {
  SqeConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.attention_size = j.at("attention_size").get<std::size_t>();
  c.mode = sqe_mode_from_string(j.at("mode").get<std::string>());
  c.head_activation = nn::activation_from_string(j.at("head_activation").get<std::string>());
  c.validate();
  return c;
}

std::vector<double> segment_weights_even(std::span<const std::size_t> utterance_counts) {
  if (utterance_counts.empty()) fail(ErrorKind::invalid_argument, "no segments to weight");
  const std::size_t total = std::accumulate(utterance_counts.begin(), utterance_counts.end(), std::size_t{0});
  if (total == 0) fail(ErrorKind::validation, "segments hold no utterances");
  std::vector<double> alpha;
  alpha.reserve(utterance_counts.size());
  for (std::size_t c : utterance_counts) alpha.push_back(static_cast<double>(c) / static_cast<double>(total));
  return alpha;
}

std::vector<double> shift_correct(std::span<const double> s_hat_i, std::span<const double> alpha, double s_true,
                                  double s_hat) {
  if (s_hat_i.size() != alpha.size()) fail(ErrorKind::shape, "shift_correct: one weight per estimate is required");
  const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorKind::validation, "shift_correct: weights sum to " + format_double(sum) + ", not 1");
  }
  std::vector<double> out(s_hat_i.size());
  const double shift = s_true - s_hat;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s_hat_i[i] + shift;
  return out;
}

json LocalEstimates::to_json() const {
  return {{"session_id", session_id}, {"alpha", alpha},   {"s_hat_i", s_hat_i},
          {"s_hat", s_hat},           {"s_bar_i", s_bar_i}, {"s_true", s_true}};
}

// ---------------------------------------------------------------------------
// Model

SqeModel::SqeModel(std::size_t input_size, SqeConfig config, std::uint64_t seed)
    : config_(config),
      bilstm_("sqe.bilstm", input_size, config.hidden_size),
      attention_("sqe.attention", 2 * config.hidden_size, config.attention_size),
      head_("sqe.head", 2 * config.hidden_size, 1, config.head_activation) {
  config_.validate();
  if (input_size == 0) fail(ErrorKind::validation, "SQE input size must be positive");
  Rng rng(mix_seed(seed, 0x5ce));
  bilstm_.initialize(rng);
  attention_.initialize(rng);
  head_.initialize(rng);
}

SqeForward SqeModel::forward(const nn::Tensor& x, const nn::Mask& mask, std::span<const double> alpha_override) const {
  if (x.rank() != 2 || x.dim(0) == 0) fail(ErrorKind::validation, "SQE input sequence is empty");
  if (config_.mode == SqeMode::even && alpha_override.empty()) {
    fail(ErrorKind::invalid_argument, "even-mode SQE needs segment weights");
  }
  if (config_.mode == SqeMode::uneven && !alpha_override.empty()) {
    fail(ErrorKind::invalid_argument, "uneven-mode SQE computes its own weights; an override is not allowed");
  }
  SqeForward out;
  out.hidden = bilstm_.forward(x, mask);
  nn::Tensor pooled;
  if (config_.mode == SqeMode::even) {
    if (alpha_override.size() != x.dim(0)) fail(ErrorKind::shape, "one weight per segment is required");
    pooled = nn::average_pool(out.hidden, alpha_override, mask);
    out.alpha.resize(alpha_override.size());
    for (std::size_t t = 0; t < alpha_override.size(); ++t) out.alpha[t] = mask[t] ? alpha_override[t] : 0.0;
  } else {
    nn::AttentionResult att = attention_.forward(out.hidden, mask);
    pooled = std::move(att.pooled);
    out.alpha = std::move(att.weights);
  }
  const double z = head_.linear_output(pooled.values());
  switch (config_.head_activation) {
    case nn::Activation::linear: out.s_hat = z; break;
    case nn::Activation::tanh: out.s_hat = std::tanh(z); break;
    case nn::Activation::sigmoid: out.s_hat = nn::sigmoid(z); break;
  }
  return out;
}

SqeForward SqeModel::forward(const SessionEmbeddings& session) const {
  if (session.size() == 0) fail(ErrorKind::validation, "session " + session.session_id + " has no segments");
  if (session.dim() != input_size()) {
    fail(ErrorKind::shape, "session " + session.session_id + ": embedding dimension " +
                               std::to_string(session.dim()) + " does not match SQE input " +
                               std::to_string(input_size()));
  }
  const nn::Mask mask(session.size(), 1);
  if (config_.mode == SqeMode::even) {
    const auto alpha = segment_weights_even(session.utterance_counts);
    return forward(session.segments, mask, alpha);
  }
  return forward(session.segments, mask);
}

std::vector<double> SqeModel::decompose(const nn::Tensor& hidden, std::span<const double> alpha,
                                        double* reconstructed) const {
  if (config_.head_activation != nn::Activation::linear) {
    fail(ErrorKind::contract, std::string("decomposition requires a linear head, found ") +
                                  nn::to_string(config_.head_activation));
  }
  if (hidden.rank() != 2 || hidden.dim(0) != alpha.size()) {
    fail(ErrorKind::shape, "decompose: one weight per hidden row is required");
  }
  std::vector<double> s_hat_i(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    s_hat_i[i] = head_.linear_output(hidden.row(i));
    total += alpha[i] * s_hat_i[i];
  }
  if (reconstructed) *reconstructed = total;
  return s_hat_i;
}

LocalEstimates SqeModel::estimate(const SessionEmbeddings& session, double s_true) const {
  const SqeForward f = forward(session);
  LocalEstimates e;
  e.session_id = session.session_id;
  e.alpha = f.alpha;
  e.s_hat = f.s_hat;
  e.s_true = s_true;
  e.s_hat_i = decompose(f.hidden, f.alpha);
  e.s_bar_i = shift_correct(e.s_hat_i, e.alpha, s_true, e.s_hat);
  return e;
}

double SqeModel::loss(const SessionEmbeddings& session, double target) const {
  const double d = forward(session).s_hat - target;
  return d * d;
}

double SqeModel::loss_and_grad(const SessionEmbeddings& session, double target, double scale) {
  if (config_.head_activation != nn::Activation::linear) {
    fail(ErrorKind::contract, "SQE training requires a linear head");
  }
  const nn::Mask mask(session.size(), 1);
  nn::BiLstmCache lstm_cache;
  const nn::Tensor h = bilstm_.forward(session.segments, mask, &lstm_cache);
  nn::AttentionCache att_cache;
  std::vector<double> alpha;
  nn::Tensor pooled;
  if (config_.mode == SqeMode::even) {
    alpha = segment_weights_even(session.utterance_counts);
    pooled = nn::average_pool(h, alpha, mask);
  } else {
    nn::AttentionResult att = attention_.forward(h, mask, &att_cache);
    pooled = std::move(att.pooled);
  }
  const double out = head_.linear_output(pooled.values());
  const double diff = out - target;
  const double d_out = 2.0 * diff * scale;

  const std::size_t f = pooled.size();
  std::vector<double> d_pooled(f);
  for (std::size_t k = 0; k < f; ++k) {
    head_.weight.grad[k] += d_out * pooled[k];
    d_pooled[k] = d_out * head_.weight.value[k];
  }
  head_.bias.grad[0] += d_out;
  const nn::Tensor dh = config_.mode == SqeMode::even
                            ? nn::average_pool_backward(d_pooled, alpha, mask, session.size())
                            : attention_.backward(d_pooled, att_cache);
  bilstm_.backward(dh, lstm_cache);
  return diff * diff;
}

std::vector<nn::Parameter*> SqeModel::parameters() {
  std::vector<nn::Parameter*> out = bilstm_.parameters();
  if (config_.mode == SqeMode::uneven) {
    for (auto* p : attention_.parameters()) out.push_back(p);
  }
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> SqeModel::parameters() const {
  std::vector<const nn::Parameter*> out = bilstm_.parameters();
  if (config_.mode == SqeMode::uneven) {
    for (const auto* p : attention_.parameters()) out.push_back(p);
  }
  for (const auto* p : head_.parameters()) out.push_back(p);
  return out;
}

nn::Checkpoint SqeModel::to_checkpoint() const {
  const auto params = parameters();
  nn::Checkpoint c = nn::make_checkpoint("sqe", params);
  c.extra["config"] = config_.to_json();
  c.extra["input_size"] = input_size();
  return c;
}

SqeModel SqeModel::from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.model_kind != "sqe") {
    fail(ErrorKind::validation, "expected an sqe checkpoint, got '" + checkpoint.model_kind + "'");
  }
  SqeConfig config;
  std::size_t input = 0;
  try {
    config = SqeConfig::from_json(checkpoint.extra.at("config"));
    input = checkpoint.extra.at("input_size").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("sqe checkpoint: ") + e.what());
  }
  SqeModel model(input, config, 0);
  checkpoint.load_into(model.parameters());
  return model;
}

SqeTraining train_sqe(std::span<const SessionEmbeddings> sessions, std::span<const double> targets,
                      const SqeConfig& config, const nn::TrainConfig& train) {
  if (sessions.empty()) fail(ErrorKind::validation, "train_sqe: no sessions");
  if (sessions.size() != targets.size()) fail(ErrorKind::validation, "train_sqe: one label per session is required");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] >= -1.0 && targets[i] <= 1.0)) {
      fail(ErrorKind::validation, "session " + sessions[i].session_id + ": normalized label " +
                                      format_double(targets[i]) + " outside [-1, 1]");
    }
  }
  SqeTraining result{SqeModel(sessions.front().dim(), config, train.seed), {}};
  SqeModel& model = result.model;
  nn::Objective objective;
  objective.loss = [&](std::size_t i) { return model.loss(sessions[i], targets[i]); };
  objective.loss_and_grad = [&](std::size_t i, double scale) {
    return model.loss_and_grad(sessions[i], targets[i], scale);
  };
  const auto params = model.parameters();
  result.history = nn::fit(params, sessions.size(), objective, train);
  return result;
}

// ---------------------------------------------------------------------------
// Refinement

RefinementConfig::RefinementConfig() {
  encoder_train.learning_rate = 2e-3;
  encoder_train.batch_size = 32;
  encoder_train.max_epochs = 10;
  encoder_train.early_stop_patience = 3;
  sqe_train.learning_rate = 1e-3;
  sqe_train.batch_size = 16;
  sqe_train.max_epochs = 50;
  sqe_train.early_stop_patience = 5;
}

void RefinementConfig::validate() const {
  if (utterances_per_segment == 0) fail(ErrorKind::validation, "M must be at least 1");
  if (!is_known_code(code)) fail(ErrorKind::invalid_argument, "unknown code '" + code + "'");
  if (!(label_clamp >= 1.0 && label_clamp <= 1.5)) fail(ErrorKind::validation, "label clamp must lie in [1, 1.5]");
  sqe.validate();
  encoder.validate();
  encoder_train.validate();
  sqe_train.validate();
}

json RefinementConfig::to_json() const {
  return {{"K", iterations},
          {"M", utterances_per_segment},
          {"code", code},
          {"sqe", sqe.to_json()},
          {"encoder", encoder.to_json()},
          {"encoder_train", encoder_train.to_json()},
          {"sqe_train", sqe_train.to_json()},
          {"label_clamp", label_clamp},
          {"seed", seed}};
}

json IterationDiagnostics::to_json() const {
  json j{{"k", k},
         {"encoder_initial_mse", encoder_initial_mse},
         {"encoder_final_mse", encoder_final_mse},
         {"encoder_best_epoch", encoder_best_epoch},
         {"n_clamped", n_clamped}};
  if (has_sqe) {
    j["sqe_train_mse"] = sqe_train_mse;
    j["sqe_validation_mse"] = sqe_validation_mse;
    j["label_delta"] = label_delta;
    j["max_identity_error"] = max_identity_error;
    j["max_decomposition_error"] = max_decomposition_error;
  }
  return j;
}

json RefinementResult::diagnostics_json(const RefinementConfig& config) const {
  json iters = json::array();
  for (const auto& d : diagnostics) iters.push_back(d.to_json());
  return {{"config", config.to_json()},
          {"encoder_head_reinitialized_each_pass", true},
          {"encoder_body_warm_started", true},
          {"sqe_retrained_from_scratch", true},
          {"n_segments", segments.size()},
          {"iterations", iters}};
}

std::vector<double> session_targets(std::span<const Session> sessions, const std::string& code) {
  const ScoreScale scale = ScoreScale::for_code(code);
  std::vector<double> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    const std::optional<int> score = s.labels ? s.labels->score(code) : std::nullopt;
    if (!score) fail(ErrorKind::validation, "session " + s.id + " has no '" + code + "' label");
    out.push_back(rescale(*score, scale));
  }
  return out;
}

namespace {

double label_distance(const SegmentLabelSet& a, const SegmentLabelSet& b) {
  double total = 0.0;
  for (const auto& [key, y] : a.entries()) {
    const double d = b.at(key.first, key.second) - y;
    total += d * d;
  }
  return std::sqrt(total);
}

std::string iteration_context(std::size_t k) { return "refinement pass " + std::to_string(k) + ": "; }

}  // namespace

RefinementResult run_refinement(std::span<const Session> sessions, const RefinementConfig& config,
                                const std::filesystem::path& run_dir) {
  config.validate();
  if (sessions.empty()) fail(ErrorKind::validation, "refinement needs training sessions");
  const std::vector<double> targets = session_targets(sessions, config.code);
  const SegmentationConfig seg_cfg{config.utterances_per_segment, {}};

  RefinementResult result;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (auto& seg : segment_session(sessions[s], seg_cfg)) {
      result.initial_labels.set(seg.session_id, seg.index, targets[s]);
      result.segments.push_back(std::move(seg));
    }
  }
  result.encoder = EncoderModel(Vocabulary::build(result.segments), config.encoder, mix_seed(config.seed, 1));
  const bool write = !run_dir.empty();
  if (write) ensure_directory(run_dir);

  SegmentLabelSet labels = result.initial_labels;
  for (std::size_t k = 0; k <= config.iterations; ++k) {
    try {
      IterationDiagnostics diag;
      diag.k = k;
      const std::filesystem::path iter_dir = run_dir / ("iter_" + std::to_string(k));

      // fine-tune on y^k, clamped
      SegmentLabelSet clamped;
      for (const auto& [key, y] : labels.entries()) {
        if (!std::isfinite(y)) fail(ErrorKind::numeric, "non-finite label for " + key.first);
        const double c = std::clamp(y, -config.label_clamp, config.label_clamp);
        diag.n_clamped += c != y;
        clamped.set(key.first, key.second, c);
      }
      if (diag.n_clamped > 0) {
        log::info(iteration_context(k) + std::to_string(diag.n_clamped) + " labels clamped to +-" +
                  format_double(config.label_clamp));
      }
      if (k > 0) result.encoder.reset_head(mix_seed(config.seed, 100 + k));
      nn::TrainConfig enc_train = config.encoder_train;
      enc_train.seed = mix_seed(config.seed, 200 + k);
      const FinetuneResult ft = finetune_encoder(result.encoder, result.segments, clamped, enc_train);
      diag.encoder_initial_mse = ft.initial_mse;
      diag.encoder_final_mse = ft.final_mse;
      diag.encoder_best_epoch = ft.history.best_epoch;
      if (write) {
        nn::Checkpoint ckpt = result.encoder.to_checkpoint();
        ckpt.train_meta = {{"history", ft.history.to_json()}, {"train", enc_train.to_json()}, {"pass", k}};
        ckpt.save(iter_dir / "encoder.ckpt.json");
        labels.save(iter_dir / "labels.jsonl");
      }

      if (k == config.iterations) {
        result.diagnostics.push_back(diag);
        break;
      }

      // SQE on the new embeddings, then shift-corrected labels
      const auto embeddings = encode_all(result.encoder, result.segments);
      const auto grouped = assemble_sessions(result.segments, embeddings);
      nn::TrainConfig sqe_train = config.sqe_train;
      sqe_train.seed = mix_seed(config.seed, 400 + k);
      const SqeTraining sqe = train_sqe(grouped, targets, config.sqe, sqe_train);
      diag.has_sqe = true;
      diag.sqe_validation_mse = sqe.history.best_loss;
      diag.sqe_train_mse = 0.0;
      for (std::size_t i = 0; i < grouped.size(); ++i) diag.sqe_train_mse += sqe.model.loss(grouped[i], targets[i]);
      diag.sqe_train_mse /= static_cast<double>(grouped.size());

      SegmentLabelSet next;
      std::vector<LocalEstimates> estimates;
      for (std::size_t i = 0; i < grouped.size(); ++i) {
        LocalEstimates e = sqe.model.estimate(grouped[i], targets[i]);
        double reconstructed = 0.0;
        for (std::size_t j = 0; j < e.alpha.size(); ++j) reconstructed += e.alpha[j] * e.s_hat_i[j];
        diag.max_decomposition_error = std::max(diag.max_decomposition_error, std::abs(reconstructed - e.s_hat));
        double corrected = 0.0;
        for (std::size_t j = 0; j < e.alpha.size(); ++j) corrected += e.alpha[j] * e.s_bar_i[j];
        diag.max_identity_error = std::max(diag.max_identity_error, std::abs(corrected - e.s_true));
        for (std::size_t j = 0; j < e.s_bar_i.size(); ++j) next.set(e.session_id, j, e.s_bar_i[j]);
        estimates.push_back(std::move(e));
      }
      diag.label_delta = label_distance(labels, next);
      if (!std::isfinite(diag.label_delta)) fail(ErrorKind::numeric, "label update is not finite");
      if (write) {
        nn::Checkpoint ckpt = sqe.model.to_checkpoint();
        ckpt.train_meta = {{"history", sqe.history.to_json()}, {"train", sqe_train.to_json()}, {"pass", k}};
        ckpt.save(iter_dir / "sqe.ckpt.json");
      }
      result.estimates.push_back(std::move(estimates));
      result.diagnostics.push_back(diag);
      labels = std::move(next);
    } catch (const Error& e) {
      throw Error(e.kind(), iteration_context(k) + e.what());
    }
  }
  result.final_labels = labels;
  if (write) write_text_file(run_dir / "diagnostics.json", result.diagnostics_json(config).dump(2) + "\n");
  return result;
}

}  // namespace hierseg
