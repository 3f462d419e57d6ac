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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/corpus.hpp"
#include "hierseg/encoder.hpp"
#include "hierseg/nn/checkpoint.hpp"
#include "hierseg/nn/layers.hpp"
#include "hierseg/nn/train.hpp"
#include "hierseg/sequence.hpp"

namespace hierseg {

/// even: segment weights proportional to utterance counts, supplied by the
/// caller. uneven: weights learned by additive attention.
enum class SqeMode { even, uneven };

const char* to_string(SqeMode mode) noexcept;
SqeMode sqe_mode_from_string(const std::string& name);

struct SqeConfig {
  std::size_t hidden_size = 32;
  std::size_t attention_size = 32;
  SqeMode mode = SqeMode::even;
  nn::Activation head_activation = nn::Activation::linear;

  void validate() const;
  nlohmann::json to_json() const;
  static SqeConfig from_json(const nlohmann::json& j);
};

/// alpha_i = utterance_count_i / total utterances.
std::vector<double> segment_weights_even(std::span<const std::size_t> utterance_counts);

/// s_bar_i = s_hat_i + s_true - s_hat.
std::vector<double> shift_correct(std::span<const double> s_hat_i, std::span<const double> alpha, double s_true,
                                  double s_hat);

struct SqeForward {
  double s_hat = 0.0;
  std::vector<double> alpha;
  nn::Tensor hidden;  // [T, 2H]
};

struct LocalEstimates {
  std::string session_id;
  std::vector<double> alpha;
  std::vector<double> s_hat_i;
  double s_hat = 0.0;
  std::vector<double> s_bar_i;
  double s_true = 0.0;

  nlohmann::json to_json() const;
};

/// Segment quality estimator: BiLSTM over segment embeddings, weighted pooling
/// and a linear head, so the session estimate splits into per-segment terms.
class SqeModel {
 public:
  SqeModel() = default;
  SqeModel(std::size_t input_size, SqeConfig config, std::uint64_t seed);

  const SqeConfig& config() const { return config_; }
  std::size_t input_size() const { return bilstm_.input_size(); }

  /// Even mode requires `alpha_override`; uneven mode rejects it.
  SqeForward forward(const nn::Tensor& x, const nn::Mask& mask, std::span<const double> alpha_override = {}) const;
  /// Uses utterance-count weights in even mode.
  SqeForward forward(const SessionEmbeddings& session) const;

  /// s_hat_i = head(h_i) over the rows of `hidden`; optionally returns
  /// sum alpha_i s_hat_i. Requires the linear head.
  std::vector<double> decompose(const nn::Tensor& hidden, std::span<const double> alpha,
                                double* reconstructed = nullptr) const;

  LocalEstimates estimate(const SessionEmbeddings& session, double s_true) const;

  double loss(const SessionEmbeddings& session, double target) const;
  double loss_and_grad(const SessionEmbeddings& session, double target, double scale);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  nn::Checkpoint to_checkpoint() const;
  static SqeModel from_checkpoint(const nn::Checkpoint& checkpoint);

 private:
  SqeConfig config_;
  nn::BiLstm bilstm_;
  nn::AdditiveAttention attention_;  // unused in even mode
  nn::Dense head_;
};

struct SqeTraining {
  SqeModel model;
  nn::TrainHistory history;
};

/// MSE of s_hat against normalized session labels, early-stopped on a
/// validation split of the sessions.
SqeTraining train_sqe(std::span<const SessionEmbeddings> sessions, std::span<const double> targets,
                      const SqeConfig& config, const nn::TrainConfig& train);

// ---------------------------------------------------------------------------
// Iterative refinement of segment labels

struct RefinementConfig {
  std::size_t iterations = 1;  // K, the number of label-update passes
  std::size_t utterances_per_segment = 40;
  std::string code = "total";
  SqeConfig sqe;
  EncoderConfig encoder;
  nn::TrainConfig encoder_train;
  nn::TrainConfig sqe_train;
  double label_clamp = 1.5;  // bound on labels fed to encoder fine-tuning
  std::uint64_t seed = 0;

  RefinementConfig();
  void validate() const;
  nlohmann::json to_json() const;
};

struct IterationDiagnostics {
  std::size_t k = 0;
  double encoder_initial_mse = 0.0;
  double encoder_final_mse = 0.0;
  std::size_t encoder_best_epoch = 0;
  bool has_sqe = false;
  double sqe_train_mse = 0.0;
  double sqe_validation_mse = 0.0;
  double label_delta = 0.0;                  // |y^{k+1} - y^k|
  double max_identity_error = 0.0;           // max |sum alpha s_bar - s|
  double max_decomposition_error = 0.0;      // max |s_hat - sum alpha s_hat_i|
  std::size_t n_clamped = 0;                 // labels clamped before fine-tuning on y^k

  nlohmann::json to_json() const;
};

struct RefinementResult {
  EncoderModel encoder;  // fine-tuned on the final labels
  std::vector<Segment> segments;
  SegmentLabelSet initial_labels;
  SegmentLabelSet final_labels;
  std::vector<std::vector<LocalEstimates>> estimates;  // one entry per label update
  std::vector<IterationDiagnostics> diagnostics;

  nlohmann::json diagnostics_json(const RefinementConfig& config) const;
};

/// Labels start at the normalized session score. Pass k = 0..K-1 fine-tunes
/// the encoder on y^k, trains a fresh SQE on the resulting embeddings and sets
/// y^{k+1} to the shift-corrected estimates; a last fine-tuning on y^K gives
/// the final encoder. When `run_dir` is non-empty each pass writes
/// iter_k/{encoder.ckpt.json, sqe.ckpt.json, labels.jsonl} and the run writes
/// diagnostics.json.
RefinementResult run_refinement(std::span<const Session> sessions, const RefinementConfig& config,
                                const std::filesystem::path& run_dir = {});

/// Normalized labels for `code`; unlabeled sessions are an error.
std::vector<double> session_targets(std::span<const Session> sessions, const std::string& code);

}  // namespace hierseg
