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

#include "hierseg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "hierseg/log.hpp"
#include "hierseg/rng.hpp"

namespace hierseg {

using nlohmann::json;

bool is_known_code(std::string_view code) {
  if (code == "total") return true;
  return std::find(kCodes.begin(), kCodes.end(), code) != kCodes.end();
}

std::optional<int> CtrsLabels::score(std::string_view code) const {
  if (code == "total") {
    if (total) return total;
    if (codes.size() == kCodes.size()) {
      int sum = 0;
      for (const auto& [_, v] : codes) sum += v;
      return sum;
    }
    return std::nullopt;
  }
  const auto it = codes.find(std::string(code));
  if (it == codes.end()) return std::nullopt;
  return it->second;
}

void CtrsLabels::validate() const {
  for (const auto& [code, value] : codes) {
    if (!is_known_code(code) || code == "total") {
      fail(ErrorKind::validation, "unknown rating code '" + code + "'");
    }
    if (value < 0 || value > 6) {
      fail(ErrorKind::validation, "score " + std::to_string(value) + " for code '" + code +
                                      "' outside [0, 6]");
    }
  }
  if (total) {
    if (*total < 0 || *total > 66) {
      fail(ErrorKind::validation, "total " + std::to_string(*total) + " outside [0, 66]");
    }
    if (codes.size() == kCodes.size()) {
      int sum = 0;
      for (const auto& [_, v] : codes) sum += v;
      if (sum != *total) {
        fail(ErrorKind::validation, "total " + std::to_string(*total) +
                                        " differs from the item sum " + std::to_string(sum));
      }
    }
  }
}

std::size_t Session::token_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.tokens.size();
  return n;
}

// ---------------------------------------------------------------------------
// Scales

ScoreScale ScoreScale::for_code(std::string_view code) {
  if (!is_known_code(code)) fail(ErrorKind::invalid_argument, "unknown code '" + std::string(code) + "'");
  if (code == "total") return {66, 40};
  return {6, 4};
}

void ScoreScale::validate() const {
  if (full_scale <= 0) fail(ErrorKind::validation, "full scale must be positive");
  if (threshold <= 0 || threshold >= full_scale) {
    fail(ErrorKind::validation, "threshold must lie strictly inside (0, full scale)");
  }
}

const char* to_string(Binary label) noexcept { return label == Binary::high ? "high" : "low"; }

Binary binarize(int score, const ScoreScale& scale) {
  scale.validate();
  if (score < 0 || score > scale.full_scale) {
    fail(ErrorKind::validation, "score " + std::to_string(score) + " outside [0, " +
                                    std::to_string(scale.full_scale) + "]");
  }
  return score >= scale.threshold ? Binary::high : Binary::low;
}

double rescale(double score, const ScoreScale& scale) {
  scale.validate();
  const double a = static_cast<double>(scale.full_scale);
  if (!(score >= 0.0 && score <= a)) {
    fail(ErrorKind::validation, "score " + format_double(score) + " outside [0, " +
                                    std::to_string(scale.full_scale) + "]");
  }
  const double half = a / 2.0;
  return (score - half) / half;
}

double unrescale(double normalized, const ScoreScale& scale, bool* clamped) {
  scale.validate();
  if (!std::isfinite(normalized)) fail(ErrorKind::numeric, "cannot unrescale a non-finite value");
  bool was_clamped = false;
  if (normalized < -1.0 || normalized > 1.0) {
    if (!clamped) log::warn("normalized value " + format_double(normalized) + " clamped to [-1, 1]");
    normalized = std::clamp(normalized, -1.0, 1.0);
    was_clamped = true;
  }
  if (clamped) *clamped = was_clamped;
  const double half = static_cast<double>(scale.full_scale) / 2.0;
  return normalized * half + half;
}

// ---------------------------------------------------------------------------
// Segmentation

void SegmentationConfig::validate() const {
  if (utterances_per_segment == 0) {
    fail(ErrorKind::validation, "utterances per segment must be at least 1");
  }
  for (std::size_t o : augmentation_offsets) {
    if (o == 0 || o > utterances_per_segment) {
      fail(ErrorKind::validation, "augmentation offset " + std::to_string(o) + " outside [1, " +
                                      std::to_string(utterances_per_segment) + "]");
    }
  }
}

std::vector<std::string> Segment::tokens(std::size_t max_tokens) const {
  std::vector<std::string> out;
  for (const auto& u : utterances) {
    for (const auto& t : u.tokens) {
      if (max_tokens != 0 && out.size() == max_tokens) return out;
      out.push_back(t);
    }
  }
  return out;
}

namespace {

std::vector<Segment> chunk(const Session& session, std::size_t first, std::size_t m) {
  std::vector<Segment> out;
  const std::size_t n = session.utterances.size();
  std::size_t begin = 0;
  std::size_t length = std::min(first, n);
  while (begin < n) {
    Segment seg;
    seg.session_id = session.id;
    seg.index = out.size();
    seg.utterances.assign(session.utterances.begin() + static_cast<std::ptrdiff_t>(begin),
                          session.utterances.begin() + static_cast<std::ptrdiff_t>(begin + length));
    out.push_back(std::move(seg));
    begin += length;
    length = std::min(m, n - begin);
  }
  return out;
}

}  // namespace

std::vector<Segment> segment_session(const Session& session, const SegmentationConfig& config) {
  config.validate();
  if (session.utterances.empty()) {
    fail(ErrorKind::validation, "session '" + session.id + "' has no utterances");
  }
  return chunk(session, config.utterances_per_segment, config.utterances_per_segment);
}

std::vector<Segment> augment_segmentations(const Session& session, const SegmentationConfig& config) {
  config.validate();
  if (config.augmentation_offsets.empty()) {
    fail(ErrorKind::validation, "augmentation needs at least one offset");
  }
  if (session.utterances.empty()) {
    fail(ErrorKind::validation, "session '" + session.id + "' has no utterances");
  }
  std::vector<Segment> all;
  for (std::size_t offset : config.augmentation_offsets) {
    auto part = chunk(session, offset, config.utterances_per_segment);
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Ingestion

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Session session_from_json(const json& j, const std::string& where) {
  auto parse_error = [&](const std::string& what) -> void {
    fail(ErrorKind::parse, where + ": " + what);
  };
  if (!j.is_object()) parse_error("expected a JSON object");
  if (!j.contains("session_id") || !j["session_id"].is_string()) parse_error("missing \"session_id\"");
  if (!j.contains("utterances") || !j["utterances"].is_array()) parse_error("missing \"utterances\"");

  Session s;
  s.id = j["session_id"].get<std::string>();
  for (const auto& u : j["utterances"]) {
    if (!u.is_object() || !u.contains("speaker") || !u.contains("text") ||
        !u["speaker"].is_string() || !u["text"].is_string()) {
      parse_error("utterance needs string \"speaker\" and \"text\"");
    }
    const std::string speaker = u["speaker"].get<std::string>();
    Utterance utt;
    if (speaker == "T") {
      utt.speaker = Speaker::therapist;
    } else if (speaker == "P") {
      utt.speaker = Speaker::patient;
    } else {
      fail(ErrorKind::validation, where + ": speaker must be \"T\" or \"P\", got \"" + speaker + "\"");
    }
    utt.tokens = tokenize(u["text"].get<std::string>());
    if (utt.tokens.empty()) fail(ErrorKind::validation, where + ": utterance has no tokens");
    s.utterances.push_back(std::move(utt));
  }
  if (s.utterances.empty()) fail(ErrorKind::validation, where + ": session has no utterances");

  if (j.contains("ctrs") && !j["ctrs"].is_null()) {
    if (!j["ctrs"].is_object()) parse_error("\"ctrs\" must be an object");
    CtrsLabels labels;
    for (const auto& [key, value] : j["ctrs"].items()) {
      if (!value.is_number_integer()) parse_error("ctrs value for '" + key + "' must be an integer");
      if (key == "total") {
        labels.total = value.get<int>();
      } else {
        labels.codes[key] = value.get<int>();
      }
    }
    try {
      labels.validate();
    } catch (const Error& e) {
      fail(ErrorKind::validation, where + ": " + e.what());
    }
    s.labels = std::move(labels);
  }
  return s;
}

}  // namespace

std::vector<Session> parse_sessions(std::string_view jsonl, const std::string& source) {
  std::vector<Session> sessions;
  std::set<std::string> seen;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, where + ": " + e.what());
    }
    Session s = session_from_json(j, where);
    if (!seen.insert(s.id).second) {
      fail(ErrorKind::validation, where + ": duplicate session id '" + s.id + "'");
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<Session> load_sessions(const std::filesystem::path& path) {
  return parse_sessions(read_text_file(path), path.string());
}

std::string session_to_jsonl(const Session& session) {
  json utterances = json::array();
  for (const auto& u : session.utterances) {
    utterances.push_back({{"speaker", u.speaker == Speaker::therapist ? "T" : "P"},
                          {"text", join_tokens(u.tokens)}});
  }
  json j = {{"session_id", session.id}, {"utterances", std::move(utterances)}};
  if (session.labels) {
    json ctrs = json::object();
    for (const auto& [code, value] : session.labels->codes) ctrs[code] = value;
    if (session.labels->total) ctrs["total"] = *session.labels->total;
    j["ctrs"] = std::move(ctrs);
  }
  return j.dump();
}

void save_sessions(const std::filesystem::path& path, const std::vector<Session>& sessions) {
  std::string out;
  for (const auto& s : sessions) out += session_to_jsonl(s) + "\n";
  write_text_file(path, out);
}

CorpusSplit split_corpus(std::size_t n_sessions, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::validation, "test fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(n_sessions);
  for (std::size_t i = 0; i < n_sessions; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x7e57));
  rng.shuffle(order);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_sessions)));
  if (n_test >= n_sessions && n_sessions > 0) n_test = n_sessions - 1;
  std::vector<std::uint8_t> is_test(n_sessions, 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;
  CorpusSplit split;
  for (std::size_t i = 0; i < n_sessions; ++i) (is_test[i] ? split.test : split.train).push_back(i);
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic generator

const char* to_string(QualityProfile profile) noexcept {
  switch (profile) {
    case QualityProfile::flat: return "flat";
    case QualityProfile::early_peaked: return "early_peaked";
    case QualityProfile::late_peaked: return "late_peaked";
  }
  return "flat";
}

QualityProfile profile_from_string(const std::string& name) {
  if (name == "flat") return QualityProfile::flat;
  if (name == "early_peaked") return QualityProfile::early_peaked;
  if (name == "late_peaked") return QualityProfile::late_peaked;
  fail(ErrorKind::parse, "unknown quality profile '" + name + "'");
}

namespace {

constexpr std::array<std::string_view, 16> kSyllables = {
    "ba", "de", "fi", "go", "ku", "la", "me", "ni", "po", "ru", "sa", "te", "vo", "wi", "xa", "zo"};

// Pseudo-words from base-16 digits, at least three syllables.
std::string background_word(std::size_t index) {
  std::string word;
  std::size_t v = index;
  for (int i = 0; i < 3 || v > 0; ++i) {
    word.insert(0, kSyllables[v % kSyllables.size()]);
    v /= kSyllables.size();
  }
  return word;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_sessions == 0) fail(ErrorKind::validation, "n_sessions must be positive");
  if (segments_min == 0 || segments_min > segments_max) {
    fail(ErrorKind::validation, "segments range must satisfy 1 <= min <= max");
  }
  if (utterances_per_segment == 0) fail(ErrorKind::validation, "utterances_per_segment must be positive");
  if (words_min == 0 || words_min > words_max) {
    fail(ErrorKind::validation, "words range must satisfy 1 <= min <= max");
  }
  if (background_vocab_size == 0) fail(ErrorKind::validation, "background vocabulary is empty");
  if (keywords.empty()) fail(ErrorKind::validation, "keyword list is empty");
  if (!(noise_std >= 0.0)) fail(ErrorKind::validation, "noise_std must be non-negative");
  if (!(keyword_rate >= 0.0 && keyword_rate <= 1.0)) {
    fail(ErrorKind::validation, "keyword_rate must lie in [0, 1]");
  }
  if (!(session_quality_min >= 0.0 && session_quality_min <= session_quality_max &&
        session_quality_max <= 6.0)) {
    fail(ErrorKind::validation, "session quality range must lie within [0, 6]");
  }
  if (!(within_session_std >= 0.0)) fail(ErrorKind::validation, "within_session_std must be non-negative");
  std::set<std::string> background;
  for (std::size_t i = 0; i < background_vocab_size; ++i) background.insert(background_word(i));
  std::set<std::string> unique_keywords;
  for (const auto& k : keywords) {
    if (tokenize(k) != std::vector<std::string>{k}) {
      fail(ErrorKind::validation, "keyword '" + k + "' is not a single lowercase token");
    }
    if (background.count(k)) fail(ErrorKind::validation, "keyword '" + k + "' is in the background vocabulary");
    if (!unique_keywords.insert(k).second) fail(ErrorKind::validation, "duplicate keyword '" + k + "'");
  }
}

double keyword_probability(double quality, const SyntheticSpec& spec) {
  return spec.keyword_rate * std::clamp(quality, 0.0, 6.0) / 6.0;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;
  const std::size_t v = spec.background_vocab_size;
  corpus.background_vocabulary.reserve(v);
  for (std::size_t i = 0; i < v; ++i) corpus.background_vocabulary.push_back(background_word(i));

  // Zipf-like background frequencies, p(rank r) proportional to 1 / (r + 1).
  std::vector<double> cumulative(v);
  double acc = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    cumulative[i] = acc;
  }
  for (double& c : cumulative) c /= acc;

  const double half_scale = 3.0;
  for (std::size_t s = 0; s < spec.n_sessions; ++s) {
    Rng rng(mix_seed(spec.seed, s));
    Session session;
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", s);
    session.id = id;

    const std::size_t n_segments = rng.between(spec.segments_min, spec.segments_max);
    const double level = rng.uniform(spec.session_quality_min, spec.session_quality_max);
    PlantedTruth truth;
    truth.session_id = session.id;
    truth.utterances_per_segment = spec.utterances_per_segment;

    for (std::size_t i = 0; i < n_segments; ++i) {
      const double position = n_segments > 1 ? static_cast<double>(i) / static_cast<double>(n_segments - 1) : 0.5;
      double shape = 1.0;
      if (spec.profile == QualityProfile::early_peaked) shape = 1.5 - position;
      if (spec.profile == QualityProfile::late_peaked) shape = 0.5 + position;
      const double quality =
          std::clamp(level * shape + rng.normal(0.0, spec.within_session_std), 0.0, 6.0);
      truth.segment_qualities.push_back(quality);

      const double p_keyword = keyword_probability(quality, spec);
      for (std::size_t u = 0; u < spec.utterances_per_segment; ++u) {
        Utterance utt;
        utt.speaker = (session.utterances.size() % 2 == 0) ? Speaker::therapist : Speaker::patient;
        const std::size_t n_words = rng.between(spec.words_min, spec.words_max);
        for (std::size_t w = 0; w < n_words; ++w) {
          if (rng.uniform() < p_keyword) {
            utt.tokens.push_back(spec.keywords[rng.index(spec.keywords.size())]);
          } else {
            const double r = rng.uniform();
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), v - 1);
            utt.tokens.push_back(corpus.background_vocabulary[idx]);
          }
        }
        session.utterances.push_back(std::move(utt));
      }
    }

    // Utterance-count-weighted mean quality; all segments have equal counts here
    // but the weighting is written out so ragged inputs stay correct.
    double weighted = 0.0;
    for (double q : truth.segment_qualities) {
      weighted += q * static_cast<double>(spec.utterances_per_segment);
    }
    weighted /= static_cast<double>(session.utterances.size());

    CtrsLabels labels;
    int sum = 0;
    for (std::string_view code : kCodes) {
      const double noisy = weighted + half_scale * rng.normal(0.0, spec.noise_std);
      const int value = static_cast<int>(std::clamp(std::nearbyint(noisy), 0.0, 6.0));
      labels.codes[std::string(code)] = value;
      sum += value;
    }
    labels.total = sum;
    session.labels = std::move(labels);

    corpus.sessions.push_back(std::move(session));
    corpus.truth.push_back(std::move(truth));
  }
  return corpus;
}

std::string planted_to_jsonl(const PlantedTruth& truth) {
  json j = {{"session_id", truth.session_id},
            {"segment_qualities", truth.segment_qualities},
            {"M", truth.utterances_per_segment}};
  return j.dump();
}

void save_planted(const std::filesystem::path& path, const std::vector<PlantedTruth>& truth) {
  std::string out;
  for (const auto& t : truth) out += planted_to_jsonl(t) + "\n";
  write_text_file(path, out);
}

std::vector<PlantedTruth> load_planted(const std::filesystem::path& path) {
  std::vector<PlantedTruth> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      PlantedTruth t;
      t.session_id = j.at("session_id").get<std::string>();
      t.segment_qualities = j.at("segment_qualities").get<std::vector<double>>();
      t.utterances_per_segment = j.at("M").get<std::size_t>();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hierseg
