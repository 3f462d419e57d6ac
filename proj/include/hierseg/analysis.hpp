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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hierseg/corpus.hpp"
#include "hierseg/metrics.hpp"
#include "hierseg/sqe.hpp"

namespace hierseg {

struct AttentionTrace {
  std::string code;
  std::size_t n_segments = 0;
  std::vector<double> mean_alpha;  // per position
  std::size_t n_sessions = 0;
};

/// Positionwise mean of the weight vectors that have exactly `n_segments`
/// entries; other sessions are skipped.
AttentionTrace attention_trace(std::span<const std::vector<double>> alphas, std::size_t n_segments,
                               const std::string& code);

enum class GroupBy { s_bar, s_hat };

const char* to_string(GroupBy by) noexcept;
GroupBy group_by_from_string(const std::string& name);

struct SessionGroups {
  std::string session_id;
  std::vector<std::size_t> low;   // segment indices, ascending
  std::vector<std::size_t> high;
};

/// The ceil(n/2) lowest values form the low group, the rest the high group.
/// Equal values are ordered by segment index.
SessionGroups split_by_value(const std::string& session_id, std::span<const double> values);

/// Sessions with fewer than two segments are skipped with a warning. s_bar
/// and s_hat differ by a per-session constant, so both give the same groups.
std::vector<SessionGroups> group_segments(std::span<const LocalEstimates> estimates, GroupBy by = GroupBy::s_bar);

struct TokenCounts {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  void add(const Segment& segment);
  double frequency(const std::string& word) const;
};

struct GroupTokens {
  TokenCounts low;
  TokenCounts high;
  std::size_t low_segments = 0;
  std::size_t high_segments = 0;
};

/// Token counts of the grouped segments; `segments` must contain every
/// segment referenced by `groups`.
GroupTokens collect_group_tokens(std::span<const Segment> segments, std::span<const SessionGroups> groups);

struct TermFrequency {
  std::string word;
  double freq_low = 0.0;
  double freq_high = 0.0;
  double ratio = 0.0;            // freq_high / freq_low when defined
  bool ratio_infinite = false;   // zero in low, present in high
  bool ratio_undefined = false;  // absent from both

  std::string ratio_text() const;
};

std::vector<TermFrequency> term_frequency_compare(const GroupTokens& groups, std::span<const std::string> words);

/// Planted quality of each length-M segment of a session: the
/// utterance-weighted mean of the generator's per-segment qualities.
std::vector<double> planted_segment_quality(const PlantedTruth& truth, std::size_t n_utterances, std::size_t m);

struct ReportRow {
  std::string approach;
  std::string code;
  std::string task;
  std::size_t m = 0;
  std::size_t k = 0;
  std::string mode;
  MetricsRecord metrics;
};

std::string metrics_csv(std::span<const ReportRow> rows);
std::string trace_csv(const AttentionTrace& trace);
std::string groups_csv(std::span<const TermFrequency> rows);
std::string trace_svg(const AttentionTrace& trace);

struct Report {
  std::vector<ReportRow> metrics;
  std::vector<AttentionTrace> traces;
  std::map<std::string, std::vector<TermFrequency>> groups;  // per code
};

/// Writes metrics.csv, trace_<code>.csv / .svg per trace and
/// groups_<code>.csv per group table. Returns the written paths in order.
std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir);

}  // namespace hierseg
