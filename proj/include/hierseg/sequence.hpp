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

#include <span>
#include <string>
#include <vector>

#include "hierseg/corpus.hpp"
#include "hierseg/encoder.hpp"
#include "hierseg/nn/tensor.hpp"

namespace hierseg {

/// Segment embeddings of one session in segment order.
struct SessionEmbeddings {
  std::string session_id;
  nn::Tensor segments;                        // [n, d]
  std::vector<std::size_t> utterance_counts;  // per segment

  std::size_t size() const { return segments.empty() ? 0 : segments.dim(0); }
  std::size_t dim() const { return segments.empty() ? 0 : segments.dim(1); }
};

/// Groups embeddings by session, in the order sessions first appear among
/// `segments`. Every segment needs exactly one embedding.
std::vector<SessionEmbeddings> assemble_sessions(std::span<const Segment> segments,
                                                 std::span<const SegmentEmbedding> embeddings);

/// Same, for embeddings without segment text; utterance counts are all one.
std::vector<SessionEmbeddings> assemble_sessions(std::span<const SegmentEmbedding> embeddings);

/// Copies the first `length` rows (at most) into a zero-padded [length, d]
/// tensor and the matching mask.
void pad_sequence(const nn::Tensor& rows, std::size_t length, nn::Tensor& padded, nn::Mask& mask);

}  // namespace hierseg
