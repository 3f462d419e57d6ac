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

#include "hierseg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "hierseg/log.hpp"

namespace hierseg {

AttentionTrace attention_trace(std::span<const std::vector<double>> alphas, std::size_t n_segments,
                               const std::string& code) {
  if (n_segments == 0) fail(ErrorKind::invalid_argument, "trace length must be positive");
  AttentionTrace trace{code, n_segments, std::vector<double>(n_segments, 0.0), 0};
  for (const auto& a : alphas) {
    if (a.size() != n_segments) continue;
    for (std::size_t i = 0; i < n_segments; ++i) trace.mean_alpha[i] += a[i];
    ++trace.n_sessions;
  }
  if (trace.n_sessions == 0) {
    fail(ErrorKind::validation, "no session has exactly " + std::to_string(n_segments) + " segments");
  }
  for (double& v : trace.mean_alpha) v /= static_cast<double>(trace.n_sessions);
  return trace;
}

const char* to_string(GroupBy by) noexcept { return by == GroupBy::s_bar ? "s_bar" : "s_hat"; }

GroupBy group_by_from_string(const std::string& name) {
  if (name == "s_bar") return GroupBy::s_bar;
  if (name == "s_hat") return GroupBy::s_hat;
  fail(ErrorKind::invalid_argument, "unknown grouping '" + name + "' (expected s_bar or s_hat)");
}

SessionGroups split_by_value(const std::string& session_id, std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  SessionGroups g{session_id, {}, {}};
  const std::size_t n_low = (values.size() + 1) / 2;
  g.low.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_low));
  g.high.assign(order.begin() + static_cast<std::ptrdiff_t>(n_low), order.end());
  std::sort(g.low.begin(), g.low.end());
  std::sort(g.high.begin(), g.high.end());
  return g;
}

std::vector<SessionGroups> group_segments(std::span<const LocalEstimates> estimates, GroupBy by) {
  std::vector<SessionGroups> out;
  std::size_t skipped = 0;
  for (const auto& e : estimates) {
    const auto& values = by == GroupBy::s_bar ? e.s_bar_i : e.s_hat_i;
    if (values.size() < 2) {
      ++skipped;
      continue;
    }
    out.push_back(split_by_value(e.session_id, values));
  }
  if (skipped > 0) log::warn(std::to_string(skipped) + " single-segment sessions skipped in grouping");
  return out;
}

void TokenCounts::add(const Segment& segment) {
  for (const auto& u : segment.utterances) {
    for (const auto& t : u.tokens) ++counts[t];
    total += u.tokens.size();
  }
}

double TokenCounts::frequency(const std::string& word) const {
  if (total == 0) return 0.0;
  const auto it = counts.find(word);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

GroupTokens collect_group_tokens(std::span<const Segment> segments, std::span<const SessionGroups> groups) {
  std::map<std::pair<std::string, std::size_t>, const Segment*> lookup;
  for (const auto& s : segments) lookup[{s.session_id, s.index}] = &s;
  auto find = [&](const std::string& id, std::size_t index) -> const Segment& {
    const auto it = lookup.find({id, index});
    if (it == lookup.end()) fail(ErrorKind::validation, "segment " + id + "#" + std::to_string(index) + " not found");
    return *it->second;
  };
  GroupTokens out;
  for (const auto& g : groups) {
    for (std::size_t i : g.low) out.low.add(find(g.session_id, i));
    for (std::size_t i : g.high) out.high.add(find(g.session_id, i));
    out.low_segments += g.low.size();
    out.high_segments += g.high.size();
  }
  return out;
}

std::string TermFrequency::ratio_text() const {
  if (ratio_undefined) return "undefined";
  if (ratio_infinite) return "inf";
  return format_double(ratio);
}

std::vector<TermFrequency> term_frequency_compare(const GroupTokens& groups, std::span<const std::string> words) {
  if (words.empty()) fail(ErrorKind::invalid_argument, "no words to compare");
  if (groups.low.total == 0 && groups.high.total == 0) fail(ErrorKind::validation, "both groups are empty");
  std::vector<TermFrequency> out;
  for (const auto& w : words) {
    TermFrequency t;
    t.word = w;
    t.freq_low = groups.low.frequency(w);
    t.freq_high = groups.high.frequency(w);
    if (t.freq_low == 0.0 && t.freq_high == 0.0) {
      t.ratio_undefined = true;
    } else if (t.freq_low == 0.0) {
      t.ratio_infinite = true;
    } else {
      t.ratio = t.freq_high / t.freq_low;
    }
    out.push_back(t);
  }
  return out;
}

std::vector<double> planted_segment_quality(const PlantedTruth& truth, std::size_t n_utterances, std::size_t m) {
  if (m == 0 || truth.utterances_per_segment == 0) fail(ErrorKind::invalid_argument, "segment length must be positive");
  const std::size_t planted_m = truth.utterances_per_segment;
  if (truth.segment_qualities.size() * planted_m < n_utterances ||
      (truth.segment_qualities.size() - 1) * planted_m >= n_utterances) {
    fail(ErrorKind::validation, "planted truth for " + truth.session_id + " does not match its utterance count");
  }
  std::vector<double> out;
  for (std::size_t start = 0; start < n_utterances; start += m) {
    const std::size_t end = std::min(start + m, n_utterances);
    double total = 0.0;
    for (std::size_t u = start; u < end; ++u) total += truth.segment_qualities[u / planted_m];
    out.push_back(total / static_cast<double>(end - start));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string metrics_csv(std::span<const ReportRow> rows) {
  std::string out = "approach,code,task,M,K,mode,rmse,mae,macro_f1,n_examples\n";
  for (const auto& r : rows) {
    out += r.approach + "," + r.code + "," + r.task + "," + std::to_string(r.m) + "," + std::to_string(r.k) + "," +
           r.mode + "," + optional_text(r.metrics.rmse) + "," + optional_text(r.metrics.mae) + "," +
           optional_text(r.metrics.macro_f1) + "," + std::to_string(r.metrics.n_examples) + "\n";
  }
  return out;
}

std::string trace_csv(const AttentionTrace& trace) {
  std::string out = "position,mean_alpha,n_sessions\n";
  for (std::size_t i = 0; i < trace.mean_alpha.size(); ++i) {
    out += std::to_string(i) + "," + format_double(trace.mean_alpha[i]) + "," + std::to_string(trace.n_sessions) + "\n";
  }
  return out;
}

std::string groups_csv(std::span<const TermFrequency> rows) {
  std::string out = "word,freq_low,freq_high,ratio\n";
  for (const auto& r : rows) {
    out += r.word + "," + format_double(r.freq_low) + "," + format_double(r.freq_high) + "," + r.ratio_text() + "\n";
  }
  return out;
}

std::string trace_svg(const AttentionTrace& trace) {
  constexpr double width = 480.0, height = 300.0;
  constexpr double left = 60.0, right = 20.0, top = 30.0, bottom = 50.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const std::size_t n = trace.mean_alpha.size();
  double y_max = 0.0;
  for (double v : trace.mean_alpha) y_max = std::max(y_max, v);
  y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;

  auto x_of = [&](std::size_t i) { return left + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : plot_w / 2); };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / y_max); };
  auto f = [](double v) { return format_fixed(v, 2); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"300\" viewBox=\"0 0 480 300\">\n";
  s += "<rect width=\"480\" height=\"300\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Mean attention (" +
       trace.code + ", " + std::to_string(n) + " segments, " + std::to_string(trace.n_sessions) + " sessions)</text>\n";
  s += "<line x1=\"" + f(left) + "\" y1=\"" + f(top + plot_h) + "\" x2=\"" + f(left + plot_w) + "\" y2=\"" +
       f(top + plot_h) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f(left) + "\" y1=\"" + f(top) + "\" x2=\"" + f(left) + "\" y2=\"" + f(top + plot_h) +
       "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = y_max * tick / 4.0;
    s += "<text x=\"" + f(left - 6) + "\" y=\"" + f(y_of(v) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + format_fixed(v, 3) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    s += "<text x=\"" + f(x_of(i)) + "\" y=\"" + f(top + plot_h + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + std::to_string(i + 1) + "</text>\n";
  }
  s += "<text x=\"" + f(left + plot_w / 2) + "\" y=\"" + f(height - 10) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">segment position</text>\n";
  std::string points;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) points += " ";
    points += f(x_of(i)) + "," + f(y_of(trace.mean_alpha[i]));
  }
  s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
  for (std::size_t i = 0; i < n; ++i) {
    s += "<circle cx=\"" + f(x_of(i)) + "\" cy=\"" + f(y_of(trace.mean_alpha[i])) + "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& contents) {
    const auto path = out_dir / name;
    write_text_file(path, contents);
    written.push_back(path);
  };
  emit("metrics.csv", metrics_csv(report.metrics));
  std::set<std::string> codes;
  for (const auto& t : report.traces) {
    if (!codes.insert(t.code).second) fail(ErrorKind::validation, "two attention traces for code '" + t.code + "'");
    emit("trace_" + t.code + ".csv", trace_csv(t));
    emit("trace_" + t.code + ".svg", trace_svg(t));
  }
  for (const auto& [code, rows] : report.groups) emit("groups_" + code + ".csv", groups_csv(rows));
  return written;
}

}  // namespace hierseg
