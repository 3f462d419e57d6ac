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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/corpus.hpp"
#include "hierseg/nn/checkpoint.hpp"
#include "hierseg/nn/layers.hpp"
#include "hierseg/nn/train.hpp"

namespace hierseg {

/// Token to row map; row 0 is the reserved unknown token.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  /// `tokens[0]` must be the unknown token.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Every distinct token of the segments, sorted, after the unknown token.
  static Vocabulary build(std::span<const Segment> segments);

  std::size_t index(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncoderConfig {
  std::size_t token_dim = 32;
  std::size_t embedding_dim = 32;
  std::size_t max_tokens = 512;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct SegmentEmbedding {
  std::string session_id;
  std::size_t segment_index = 0;
  std::vector<double> vector;
};

/// Normalized per-segment labels keyed by (session id, segment index).
class SegmentLabelSet {
 public:
  using Key = std::pair<std::string, std::size_t>;

  void set(const std::string& session_id, std::size_t index, double value);
  double at(const std::string& session_id, std::size_t index) const;
  std::optional<double> find(const std::string& session_id, std::size_t index) const;
  std::size_t size() const { return labels_.size(); }
  const std::map<Key, double>& entries() const { return labels_; }

  /// {"session_id": ..., "segment_index": ..., "y": ...} per line.
  std::string to_jsonl() const;
  void save(const std::filesystem::path& path) const;
  static SegmentLabelSet load(const std::filesystem::path& path);

 private:
  std::map<Key, double> labels_;
};

/// Segment encoder: mean of token embeddings over the first max_tokens tokens,
/// tanh projection to the embedding, and a linear scalar head used only while
/// fine-tuning on segment labels.
class EncoderModel {
 public:
  EncoderModel() = default;
  EncoderModel(Vocabulary vocabulary, EncoderConfig config, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }

  std::vector<std::size_t> token_ids(const Segment& segment) const;

  SegmentEmbedding encode(const Segment& segment) const;
  std::vector<double> embed_ids(std::span<const std::size_t> ids) const;
  /// Scalar head output for the segment.
  double predict(const Segment& segment) const;
  double predict_ids(std::span<const std::size_t> ids) const;

  /// Squared error against `target`; accumulates scale * gradient.
  double loss_and_grad(std::span<const std::size_t> ids, double target, double scale);

  void reset_head(std::uint64_t seed);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  nn::Checkpoint to_checkpoint() const;
  static EncoderModel from_checkpoint(const nn::Checkpoint& checkpoint);

 private:
  Vocabulary vocabulary_;
  EncoderConfig config_;
  nn::Parameter table_;  // [V, token_dim]
  nn::Dense projection_;
  nn::Dense head_;
};

struct FinetuneResult {
  nn::TrainHistory history;
  double initial_mse = 0.0;  // over all given segments, before training
  double final_mse = 0.0;
  std::size_t n_segments = 0;
};

/// MSE regression of the scalar head on the labels, early-stopped on a
/// session-level validation split. Labels must lie in [-1.5, 1.5].
FinetuneResult finetune_encoder(EncoderModel& model, std::span<const Segment> segments,
                                const SegmentLabelSet& labels, const nn::TrainConfig& config);

std::vector<SegmentEmbedding> encode_all(const EncoderModel& model, std::span<const Segment> segments);

/// {"session_id": ..., "segment_index": ..., "vector": [...]} per line.
std::vector<SegmentEmbedding> import_embeddings(const std::filesystem::path& path);
void export_embeddings(const std::filesystem::path& path, std::span<const SegmentEmbedding> embeddings);

}  // namespace hierseg
