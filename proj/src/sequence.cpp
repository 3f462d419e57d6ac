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

#include "hierseg/sequence.hpp"

#include <algorithm>
#include <map>

#include "hierseg/error.hpp"

namespace hierseg {

namespace {

std::string key_name(const std::string& session, std::size_t index) {
  return session + "#" + std::to_string(index);
}

}  // namespace

std::vector<SessionEmbeddings> assemble_sessions(std::span<const Segment> segments,
                                                 std::span<const SegmentEmbedding> embeddings) {
  std::map<std::pair<std::string, std::size_t>, const SegmentEmbedding*> lookup;
  std::size_t dim = 0;
  for (const auto& e : embeddings) {
    if (dim == 0) dim = e.vector.size();
    if (e.vector.size() != dim) fail(ErrorKind::shape, "embedding dimensions differ");
    lookup[{e.session_id, e.segment_index}] = &e;
  }

  std::vector<SessionEmbeddings> out;
  std::map<std::string, std::size_t> position;
  std::vector<std::vector<const Segment*>> grouped;
  for (const auto& seg : segments) {
    const auto [it, inserted] = position.emplace(seg.session_id, grouped.size());
    if (inserted) grouped.emplace_back();
    grouped[it->second].push_back(&seg);
  }
  for (auto& group : grouped) {
    std::sort(group.begin(), group.end(), [](const Segment* a, const Segment* b) { return a->index < b->index; });
    SessionEmbeddings s;
    s.session_id = group.front()->session_id;
    s.segments = nn::Tensor({group.size(), dim});
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group[i]->index != i) {
        fail(ErrorKind::validation, "session " + s.session_id + " has non-contiguous segment indices");
      }
      const auto found = lookup.find({s.session_id, i});
      if (found == lookup.end()) fail(ErrorKind::validation, "no embedding for segment " + key_name(s.session_id, i));
      std::copy(found->second->vector.begin(), found->second->vector.end(), s.segments.row(i).begin());
      s.utterance_counts.push_back(group[i]->utterance_count());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SessionEmbeddings> assemble_sessions(std::span<const SegmentEmbedding> embeddings) {
  std::vector<Segment> segments;
  segments.reserve(embeddings.size());
  for (const auto& e : embeddings) {
    Segment seg;
    seg.session_id = e.session_id;
    seg.index = e.segment_index;
    seg.utterances.resize(1);
    segments.push_back(std::move(seg));
  }
  return assemble_sessions(segments, embeddings);
}

void pad_sequence(const nn::Tensor& rows, std::size_t length, nn::Tensor& padded, nn::Mask& mask) {
  const std::size_t n = std::min(rows.dim(0), length);
  const std::size_t d = rows.dim(1);
  padded = nn::Tensor({length, d});
  mask.assign(length, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto src = rows.row(t);
    std::copy(src.begin(), src.end(), padded.row(t).begin());
    mask[t] = 1;
  }
}

}  // namespace hierseg
