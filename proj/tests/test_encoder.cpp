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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "hierseg/encoder.hpp"
#include "hierseg/metrics.hpp"
#include "support.hpp"

using namespace hierseg;

namespace {

Segment segment_of(std::vector<std::string> tokens, const std::string& id = "s", std::size_t index = 0) {
  Segment seg;
  seg.session_id = id;
  seg.index = index;
  seg.utterances.push_back({Speaker::therapist, std::move(tokens)});
  return seg;
}

struct Fixture {
  std::vector<Segment> segments;
  std::vector<double> keyword_fraction;
  std::vector<std::string> keywords;
};

/// Small synthetic corpus cut into 10-utterance segments.
Fixture small_corpus(std::uint64_t seed, std::size_t n_sessions = 24) {
  SyntheticSpec spec;
  spec.n_sessions = n_sessions;
  spec.segments_min = 3;
  spec.segments_max = 5;
  spec.utterances_per_segment = 10;
  spec.background_vocab_size = 60;
  spec.keyword_rate = 0.3;
  spec.seed = seed;
  const auto corpus = generate_synthetic_corpus(spec);
  Fixture f;
  f.keywords = spec.keywords;
  const std::set<std::string> kw(spec.keywords.begin(), spec.keywords.end());
  SegmentationConfig cfg;
  cfg.utterances_per_segment = 10;
  for (const auto& s : corpus.sessions) {
    for (auto& seg : segment_session(s, cfg)) {
      const auto toks = seg.tokens();
      const auto hits = std::count_if(toks.begin(), toks.end(), [&](const auto& t) { return kw.count(t) > 0; });
      f.keyword_fraction.push_back(static_cast<double>(hits) / toks.size());
      f.segments.push_back(std::move(seg));
    }
  }
  return f;
}

EncoderConfig small_config() {
  EncoderConfig c;
  c.token_dim = 8;
  c.embedding_dim = 8;
  return c;
}

nn::TrainConfig train_config(std::uint64_t seed, std::size_t epochs = 30) {
  nn::TrainConfig t;
  t.learning_rate = 1e-2;
  t.batch_size = 8;
  t.max_epochs = epochs;
  t.early_stop_patience = 0;
  t.seed = seed;
  return t;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("vocabulary reserves the unknown token") {
  const std::vector<Segment> segs{segment_of({"b", "a", "b"})};
  const auto v = Vocabulary::build(segs);
  CHECK(v.tokens() == std::vector<std::string>{"<unk>", "a", "b"});
  CHECK(v.index("zzz") == Vocabulary::kUnknown);
}

TEST_CASE("zero embedding table gives a zero embedding") {
  const std::vector<Segment> segs{segment_of({"x", "y", "z"})};
  EncoderModel m(Vocabulary::build(segs), small_config(), 3);
  m.parameters()[0]->value.fill(0.0);
  for (double v : m.encode(segs[0]).vector) CHECK(v == 0.0);
}

TEST_CASE("encoding is deterministic and truncated") {
  const auto seg = segment_of({"a", "b", "c", "d"});
  const std::vector<Segment> segs{seg, segment_of({"a", "b", "c", "e"})};
  auto cfg = small_config();
  cfg.max_tokens = 3;
  EncoderModel m(Vocabulary::build(segs), cfg, 5);
  CHECK(m.encode(seg).vector == m.encode(segment_of({"a", "b", "c", "d"})).vector);
  CHECK(m.encode(segs[0]).vector == m.encode(segs[1]).vector);
  cfg.max_tokens = 4;
  EncoderModel full(Vocabulary::build(segs), cfg, 5);
  CHECK(full.encode(segs[0]).vector != full.encode(segs[1]).vector);
}

TEST_CASE("empty segment is an error") {
  Segment empty;
  empty.session_id = "s";
  EncoderModel m(Vocabulary(), small_config(), 1);
  CHECK_THROWS_AS(m.encode(empty), Error);
}

TEST_CASE("encoder head gradients match central differences over 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::vector<Segment> segs{segment_of({"a", "b", "c", "a", "d"})};
    EncoderModel m(Vocabulary::build(segs), small_config(), seed);
    for (auto* p : m.parameters()) {
      if (p->value.rank() == 1) {
        for (double& b : p->value.values()) b = rng.uniform(-0.3, 0.3);
      }
    }
    const auto ids = m.token_ids(segs[0]);
    const double target = rng.uniform(-1, 1);
    for (auto* p : m.parameters()) p->zero_grad();
    m.loss_and_grad(ids, target, 1.0);
    auto loss = [&] {
      const double d = m.predict_ids(ids) - target;
      return d * d;
    };
    CHECK(test::max_param_fd_error(m.parameters(), loss) < 1e-4);
  }
}

TEST_CASE("fine-tuning on a constant label reduces the error") {
  const auto f = small_corpus(2, 10);
  EncoderModel m(Vocabulary::build(f.segments), small_config(), 1);
  SegmentLabelSet labels;
  for (const auto& s : f.segments) labels.set(s.session_id, s.index, 0.4);
  const auto r = finetune_encoder(m, f.segments, labels, train_config(1, 10));
  CHECK(r.final_mse < r.initial_mse);
  for (const auto& s : f.segments) CHECK(std::abs(m.predict(s) - 0.4) < std::abs(0.4) + 1e-9);
}

TEST_CASE("fine-tuning recovers an affine keyword signal") {
  const auto f = small_corpus(4, 40);
  EncoderModel m(Vocabulary::build(f.segments), small_config(), 2);
  SegmentLabelSet labels;
  std::vector<double> y;
  for (std::size_t i = 0; i < f.segments.size(); ++i) {
    y.push_back(std::clamp(-0.9 + 5.0 * f.keyword_fraction[i], -1.0, 1.0));
    labels.set(f.segments[i].session_id, f.segments[i].index, y.back());
  }
  std::vector<double> before_hi, before_lo;
  std::vector<std::vector<double>> before;
  for (const auto& s : f.segments) before.push_back(m.encode(s).vector);
  finetune_encoder(m, f.segments, labels, train_config(3, 40));
  std::vector<double> pred;
  for (const auto& s : f.segments) pred.push_back(m.predict(s));
  CHECK(spearman(pred, f.keyword_fraction) >= 0.9);

  // top and bottom label quartiles drift apart in embedding space
  std::vector<std::size_t> order(y.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return y[a] < y[b]; });
  const std::size_t q = order.size() / 4;
  auto mean_gap = [&](const std::vector<std::vector<double>>& emb) {
    double total = 0.0;
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = order.size() - q; b < order.size(); ++b) total += distance(emb[order[a]], emb[order[b]]);
    }
    return total / static_cast<double>(q * q);
  };
  std::vector<std::vector<double>> after;
  for (const auto& s : f.segments) after.push_back(m.encode(s).vector);
  CHECK(mean_gap(after) > mean_gap(before));
}

TEST_CASE("trained head predictions are not anti-correlated with labels") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto f = small_corpus(100 + seed, 20);
    EncoderModel m(Vocabulary::build(f.segments), small_config(), seed);
    SegmentLabelSet labels;
    std::vector<double> y;
    for (std::size_t i = 0; i < f.segments.size(); ++i) {
      y.push_back(std::clamp(-0.9 + 5.0 * f.keyword_fraction[i], -1.0, 1.0));
      labels.set(f.segments[i].session_id, f.segments[i].index, y.back());
    }
    const auto r = finetune_encoder(m, f.segments, labels, train_config(seed, 20));
    std::vector<double> pred;
    for (const auto& s : f.segments) pred.push_back(m.predict(s));
    INFO("seed " << seed << " best epoch " << r.history.best_epoch);
    CHECK(spearman(pred, y) >= 0.0);
  }
}

TEST_CASE("fine-tuning is reproducible") {
  const auto f = small_corpus(6, 8);
  SegmentLabelSet labels;
  for (std::size_t i = 0; i < f.segments.size(); ++i) {
    labels.set(f.segments[i].session_id, f.segments[i].index, f.keyword_fraction[i]);
  }
  auto run = [&] {
    EncoderModel m(Vocabulary::build(f.segments), small_config(), 9);
    finetune_encoder(m, f.segments, labels, train_config(9, 5));
    return m.to_checkpoint().to_json().dump();
  };
  CHECK(run() == run());
}

TEST_CASE("fine-tuning rejects out-of-range labels") {
  const auto f = small_corpus(6, 4);
  EncoderModel m(Vocabulary::build(f.segments), small_config(), 9);
  SegmentLabelSet labels;
  for (const auto& s : f.segments) labels.set(s.session_id, s.index, 1.6);
  CHECK(test::error_kind_of([&] { finetune_encoder(m, f.segments, labels, train_config(1, 1)); }) ==
        ErrorKind::validation);
}

TEST_CASE("encoder checkpoints reproduce embeddings") {
  const auto f = small_corpus(8, 4);
  EncoderModel m(Vocabulary::build(f.segments), small_config(), 4);
  const auto dir = test::scratch_dir("encoder_ckpt");
  m.to_checkpoint().save(dir / "e.json");
  const auto back = EncoderModel::from_checkpoint(nn::Checkpoint::load(dir / "e.json"));
  for (const auto& s : f.segments) CHECK(back.encode(s).vector == m.encode(s).vector);
}

TEST_CASE("segment labels round trip and reject non-finite values") {
  SegmentLabelSet labels;
  labels.set("a", 0, 0.25);
  labels.set("a", 1, -1.0 / 3.0);
  const auto dir = test::scratch_dir("labels");
  labels.save(dir / "l.jsonl");
  const auto back = SegmentLabelSet::load(dir / "l.jsonl");
  CHECK(back.at("a", 1) == -1.0 / 3.0);
  CHECK(!back.find("b", 0).has_value());
  CHECK_THROWS_AS(labels.set("a", 2, std::nan("")), Error);
}

TEST_CASE("embedding import and export") {
  const auto dir = test::scratch_dir("embeddings");
  std::vector<SegmentEmbedding> embs;
  Rng rng(1);
  for (std::size_t i = 0; i < 3; ++i) embs.push_back({"s", i, test::random_vector(32, rng)});
  export_embeddings(dir / "e.jsonl", embs);
  const auto back = import_embeddings(dir / "e.jsonl");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i].vector == embs[i].vector);

  embs.push_back({"s", 3, test::random_vector(64, rng)});
  export_embeddings(dir / "mixed.jsonl", embs);
  CHECK_THROWS_AS(import_embeddings(dir / "mixed.jsonl"), Error);
}
