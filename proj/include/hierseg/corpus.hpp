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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hierseg {

enum class Speaker { therapist, patient };

struct Utterance {
  Speaker speaker = Speaker::therapist;
  std::vector<std::string> tokens;  // lowercased, punctuation stripped, non-empty
};

/// The eleven rating-scale items, in canonical order.
inline constexpr std::array<std::string_view, 11> kCodes = {
    "ag", "at", "co", "fb", "gd", "hw", "ip", "cb", "pt", "sc", "un"};

bool is_known_code(std::string_view code);  // one of kCodes or "total"

struct CtrsLabels {
  std::map<std::string, int> codes;  // subset of kCodes, each in [0, 6]
  std::optional<int> total;          // [0, 66]

  /// Score for an item or "total". A missing total is the sum of the items
  /// when all eleven are present.
  std::optional<int> score(std::string_view code) const;
  void validate() const;
};

struct Session {
  std::string id;
  std::vector<Utterance> utterances;
  std::optional<CtrsLabels> labels;

  std::size_t token_count() const;
};

/// Full-scale value A and the high/low cut used for binarization.
struct ScoreScale {
  int full_scale = 66;
  int threshold = 40;

  static ScoreScale for_code(std::string_view code);  // 6/4 for items, 66/40 for total
  void validate() const;
};

enum class Binary { low, high };

const char* to_string(Binary label) noexcept;

Binary binarize(int score, const ScoreScale& scale);
/// f(s) = (s - A/2) / (A/2).
double rescale(double score, const ScoreScale& scale);
/// Inverse of rescale. Inputs outside [-1, 1] are clamped; the clamp is
/// reported through `clamped` when given and logged as a warning otherwise.
double unrescale(double normalized, const ScoreScale& scale, bool* clamped = nullptr);

struct SegmentationConfig {
  std::size_t utterances_per_segment = 40;
  std::vector<std::size_t> augmentation_offsets;  // first-segment lengths, each in [1, M]

  void validate() const;
};

struct Segment {
  std::string session_id;
  std::size_t index = 0;
  std::vector<Utterance> utterances;

  std::size_t utterance_count() const { return utterances.size(); }
  /// Utterance tokens in order, truncated to `max_tokens` when nonzero.
  std::vector<std::string> tokens(std::size_t max_tokens = 0) const;
};

/// Chunks of M utterances; the last chunk holds the remainder.
std::vector<Segment> segment_session(const Session& session, const SegmentationConfig& config);

/// One segmentation per offset, whose first segment has min(offset, n)
/// utterances; returns the union of all of their segments.
std::vector<Segment> augment_segmentations(const Session& session, const SegmentationConfig& config);

/// Lowercases, strips punctuation, splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

std::vector<Session> parse_sessions(std::string_view jsonl, const std::string& source = "<input>");
std::vector<Session> load_sessions(const std::filesystem::path& path);
std::string session_to_jsonl(const Session& session);
void save_sessions(const std::filesystem::path& path, const std::vector<Session>& sessions);

struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded session-level split; order within each side follows the corpus.
CorpusSplit split_corpus(std::size_t n_sessions, double test_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic corpora with planted per-segment quality

enum class QualityProfile { flat, early_peaked, late_peaked };

const char* to_string(QualityProfile profile) noexcept;
QualityProfile profile_from_string(const std::string& name);

struct SyntheticSpec {
  std::size_t n_sessions = 200;
  std::size_t segments_min = 6;
  std::size_t segments_max = 12;
  std::size_t utterances_per_segment = 40;
  std::size_t words_min = 4;
  std::size_t words_max = 12;
  std::size_t background_vocab_size = 300;
  std::vector<std::string> keywords = {"agenda", "evidence", "feeling", "helpful", "homework"};
  QualityProfile profile = QualityProfile::flat;
  double noise_std = 0.1;           // label noise in normalized [-1, 1] units
  double keyword_rate = 0.08;       // keyword probability per token at quality 6
  double session_quality_min = 1.0; // session level drawn uniformly in this range
  double session_quality_max = 5.0;
  double within_session_std = 0.5;  // segment spread around the profile
  std::uint64_t seed = 7;

  void validate() const;
};

struct PlantedTruth {
  std::string session_id;
  std::vector<double> segment_qualities;
  std::size_t utterances_per_segment = 0;
};

struct SyntheticCorpus {
  std::vector<Session> sessions;
  std::vector<PlantedTruth> truth;
  std::vector<std::string> background_vocabulary;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

/// Keyword probability per token for a segment of quality q in [0, 6].
double keyword_probability(double quality, const SyntheticSpec& spec);

std::string planted_to_jsonl(const PlantedTruth& truth);
void save_planted(const std::filesystem::path& path, const std::vector<PlantedTruth>& truth);
std::vector<PlantedTruth> load_planted(const std::filesystem::path& path);

}  // namespace hierseg
