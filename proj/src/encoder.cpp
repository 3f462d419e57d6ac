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

#include "hierseg/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "hierseg/rng.hpp"

namespace hierseg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{kUnknownToken}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_[0] != kUnknownToken) {
    fail(ErrorKind::validation, "vocabulary must start with the unknown token");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      fail(ErrorKind::validation, "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const Segment> segments) {
  std::set<std::string> distinct;
  for (const auto& seg : segments) {
    for (const auto& u : seg.utterances) distinct.insert(u.tokens.begin(), u.tokens.end());
  }
  distinct.erase(kUnknownToken);
  std::vector<std::string> tokens{kUnknownToken};
  tokens.insert(tokens.end(), distinct.begin(), distinct.end());
  return Vocabulary(std::move(tokens));
}

std::size_t Vocabulary::index(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

// ---------------------------------------------------------------------------
// Config and labels

void EncoderConfig::validate() const {
  if (token_dim == 0 || embedding_dim == 0) fail(ErrorKind::validation, "encoder dimensions must be positive");
  if (max_tokens == 0) fail(ErrorKind::validation, "max_tokens must be positive");
}

json EncoderConfig::to_json() const {
  return {{"token_dim", token_dim}, {"embedding_dim", embedding_dim}, {"max_tokens", max_tokens}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  c.token_dim = j.at("token_dim").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.validate();
  return c;
}

void SegmentLabelSet::set(const std::string& session_id, std::size_t index, double value) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::numeric, "non-finite label for segment " + session_id + "#" + std::to_string(index));
  }
  labels_[{session_id, index}] = value;
}

double SegmentLabelSet::at(const std::string& session_id, std::size_t index) const {
  const auto it = labels_.find({session_id, index});
  if (it == labels_.end()) {
    fail(ErrorKind::validation, "segment " + session_id + "#" + std::to_string(index) + " has no label");
  }
  return it->second;
}

std::optional<double> SegmentLabelSet::find(const std::string& session_id, std::size_t index) const {
  const auto it = labels_.find({session_id, index});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::string SegmentLabelSet::to_jsonl() const {
  std::string out;
  for (const auto& [key, y] : labels_) {
    out += json{{"session_id", key.first}, {"segment_index", key.second}, {"y", y}}.dump() + "\n";
  }
  return out;
}

void SegmentLabelSet::save(const std::filesystem::path& path) const { write_text_file(path, to_jsonl()); }

SegmentLabelSet SegmentLabelSet::load(const std::filesystem::path& path) {
  SegmentLabelSet set;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      set.set(j.at("session_id").get<std::string>(), j.at("segment_index").get<std::size_t>(),
              j.at("y").get<double>());
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Model

EncoderModel::EncoderModel(Vocabulary vocabulary, EncoderConfig config, std::uint64_t seed)
    : vocabulary_(std::move(vocabulary)),
      config_(config),
      table_("encoder.token_embedding", {vocabulary_.size(), config.token_dim}),
      projection_("encoder.projection", config.token_dim, config.embedding_dim, nn::Activation::tanh),
      head_("encoder.head", config.embedding_dim, 1, nn::Activation::linear) {
  config_.validate();
  Rng rng(mix_seed(seed, 0xe1c0de));
  nn::glorot_uniform(table_.value, rng);
  projection_.initialize(rng);
  head_.initialize(rng);
}

std::vector<std::size_t> EncoderModel::token_ids(const Segment& segment) const {
  std::vector<std::size_t> ids;
  for (const auto& u : segment.utterances) {
    for (const auto& t : u.tokens) {
      if (ids.size() == config_.max_tokens) return ids;
      ids.push_back(vocabulary_.index(t));
    }
  }
  return ids;
}

namespace {

nn::Tensor mean_embedding(const nn::Parameter& table, std::span<const std::size_t> ids) {
  if (ids.empty()) fail(ErrorKind::validation, "cannot encode an empty segment");
  const std::size_t d = table.value.dim(1);
  nn::Tensor x({1, d});
  for (std::size_t id : ids) {
    const auto row = table.value.row(id);
    for (std::size_t k = 0; k < d; ++k) x[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (std::size_t k = 0; k < d; ++k) x[k] *= inv;
  return x;
}

}  // namespace

std::vector<double> EncoderModel::embed_ids(std::span<const std::size_t> ids) const {
  const nn::Tensor e = projection_.forward(mean_embedding(table_, ids));
  return e.storage();
}

SegmentEmbedding EncoderModel::encode(const Segment& segment) const {
  const auto ids = token_ids(segment);
  if (ids.empty()) {
    fail(ErrorKind::validation, "segment " + segment.session_id + "#" + std::to_string(segment.index) +
                                    " is empty");
  }
  return {segment.session_id, segment.index, embed_ids(ids)};
}

double EncoderModel::predict_ids(std::span<const std::size_t> ids) const {
  const nn::Tensor e = projection_.forward(mean_embedding(table_, ids));
  return head_.forward(e)[0];
}

double EncoderModel::predict(const Segment& segment) const { return predict_ids(token_ids(segment)); }

double EncoderModel::loss_and_grad(std::span<const std::size_t> ids, double target, double scale) {
  nn::DenseCache proj_cache;
  nn::DenseCache head_cache;
  const nn::Tensor x = mean_embedding(table_, ids);
  const nn::Tensor e = projection_.forward(x, &proj_cache);
  const nn::Tensor y = head_.forward(e, &head_cache);
  const double diff = y[0] - target;
  nn::Tensor dy({1, 1}, 2.0 * diff * scale);
  const nn::Tensor de = head_.backward(dy, head_cache);
  const nn::Tensor dx = projection_.backward(de, proj_cache);
  const double inv = 1.0 / static_cast<double>(ids.size());
  const std::size_t d = config_.token_dim;
  for (std::size_t id : ids) {
    auto grad_row = table_.grad.row(id);
    for (std::size_t k = 0; k < d; ++k) grad_row[k] += dx[k] * inv;
  }
  return diff * diff;
}

void EncoderModel::reset_head(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x4ead));
  head_.initialize(rng);
}

std::vector<nn::Parameter*> EncoderModel::parameters() {
  std::vector<nn::Parameter*> out{&table_};
  for (auto* p : projection_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> EncoderModel::parameters() const {
  std::vector<const nn::Parameter*> out{&table_};
  for (const auto* p : projection_.parameters()) out.push_back(p);
  for (const auto* p : head_.parameters()) out.push_back(p);
  return out;
}

nn::Checkpoint EncoderModel::to_checkpoint() const {
  const auto params = parameters();
  nn::Checkpoint c = nn::make_checkpoint("encoder", params);
  c.extra["config"] = config_.to_json();
  c.extra["vocabulary"] = vocabulary_.tokens();
  return c;
}

EncoderModel EncoderModel::from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.model_kind != "encoder") {
    fail(ErrorKind::validation, "expected an encoder checkpoint, got '" + checkpoint.model_kind + "'");
  }
  EncoderModel model;
  try {
    model.config_ = EncoderConfig::from_json(checkpoint.extra.at("config"));
    model.vocabulary_ = Vocabulary(checkpoint.extra.at("vocabulary").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("encoder checkpoint: ") + e.what());
  }
  model.table_ = nn::Parameter("encoder.token_embedding", {model.vocabulary_.size(), model.config_.token_dim});
  model.projection_ = nn::Dense("encoder.projection", model.config_.token_dim, model.config_.embedding_dim,
                                nn::Activation::tanh);
  model.head_ = nn::Dense("encoder.head", model.config_.embedding_dim, 1, nn::Activation::linear);
  checkpoint.load_into(model.parameters());
  return model;
}

// ---------------------------------------------------------------------------
// Training and embedding I/O

FinetuneResult finetune_encoder(EncoderModel& model, std::span<const Segment> segments,
                                const SegmentLabelSet& labels, const nn::TrainConfig& config) {
  if (segments.empty()) fail(ErrorKind::validation, "finetune_encoder: no segments");
  std::vector<std::vector<std::size_t>> ids;
  std::vector<double> targets;
  std::vector<std::size_t> groups;
  std::map<std::string, std::size_t> session_group;
  ids.reserve(segments.size());
  for (const auto& seg : segments) {
    const double y = labels.at(seg.session_id, seg.index);
    if (!(y >= -1.5 && y <= 1.5)) {
      fail(ErrorKind::validation, "label " + format_double(y) + " for segment " + seg.session_id + "#" +
                                      std::to_string(seg.index) + " outside [-1.5, 1.5]");
    }
    auto seg_ids = model.token_ids(seg);
    if (seg_ids.empty()) fail(ErrorKind::validation, "segment " + seg.session_id + " is empty");
    ids.push_back(std::move(seg_ids));
    targets.push_back(y);
    groups.push_back(session_group.emplace(seg.session_id, session_group.size()).first->second);
  }

  auto all_mse = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double d = model.predict_ids(ids[i]) - targets[i];
      total += d * d;
    }
    return total / static_cast<double>(ids.size());
  };

  FinetuneResult result;
  result.n_segments = ids.size();
  result.initial_mse = all_mse();
  nn::Objective objective;
  objective.loss = [&](std::size_t i) {
    const double d = model.predict_ids(ids[i]) - targets[i];
    return d * d;
  };
  objective.loss_and_grad = [&](std::size_t i, double scale) {
    return model.loss_and_grad(ids[i], targets[i], scale);
  };
  const auto params = model.parameters();
  result.history = nn::fit(params, ids.size(), objective, config, groups);
  result.final_mse = all_mse();
  return result;
}

std::vector<SegmentEmbedding> encode_all(const EncoderModel& model, std::span<const Segment> segments) {
  std::vector<SegmentEmbedding> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) out.push_back(model.encode(seg));
  return out;
}

std::vector<SegmentEmbedding> import_embeddings(const std::filesystem::path& path) {
  std::vector<SegmentEmbedding> out;
  std::set<std::pair<std::string, std::size_t>> seen;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    SegmentEmbedding e;
    try {
      const json j = json::parse(line);
      e.session_id = j.at("session_id").get<std::string>();
      e.segment_index = j.at("segment_index").get<std::size_t>();
      e.vector = j.at("vector").get<std::vector<double>>();
    } catch (const json::exception& ex) {
      fail(ErrorKind::parse, where + ": " + ex.what());
    }
    if (e.vector.empty()) fail(ErrorKind::validation, where + ": empty vector");
    if (!out.empty() && e.vector.size() != out.front().vector.size()) {
      fail(ErrorKind::shape, where + ": vector dimension " + std::to_string(e.vector.size()) +
                                 " differs from " + std::to_string(out.front().vector.size()));
    }
    for (double v : e.vector) {
      if (!std::isfinite(v)) fail(ErrorKind::numeric, where + ": non-finite component");
    }
    if (!seen.insert({e.session_id, e.segment_index}).second) {
      fail(ErrorKind::validation, where + ": duplicate embedding for " + e.session_id + "#" +
                                      std::to_string(e.segment_index));
    }
    out.push_back(std::move(e));
  }
  return out;
}

void export_embeddings(const std::filesystem::path& path, std::span<const SegmentEmbedding> embeddings) {
  std::string out;
  for (const auto& e : embeddings) {
    out += json{{"session_id", e.session_id}, {"segment_index", e.segment_index}, {"vector", e.vector}}.dump() +
           "\n";
  }
  write_text_file(path, out);
}

}  // namespace hierseg
