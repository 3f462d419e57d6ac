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

#include "hierseg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "hierseg/analysis.hpp"
#include "hierseg/baselines.hpp"
#include "hierseg/encoder.hpp"
#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "hierseg/log.hpp"
#include "hierseg/sequence.hpp"
#include "hierseg/sqe.hpp"

namespace hierseg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "run.json";
constexpr const char* kPredictorFile = "predictor.ckpt.json";

struct SplitCorpus {
  std::vector<Session> train;
  std::vector<Session> test;
};

SplitCorpus load_split(const fs::path& path, double test_fraction, std::uint64_t seed) {
  const std::vector<Session> all = load_sessions(path);
  if (all.empty()) fail(ErrorKind::validation, path.string() + ": corpus is empty");
  const CorpusSplit split = split_corpus(all.size(), test_fraction, seed);
  SplitCorpus out;
  for (std::size_t i : split.train) out.train.push_back(all[i]);
  for (std::size_t i : split.test) out.test.push_back(all[i]);
  return out;
}

nn::TrainConfig train_config(const RunConfig& c, const std::string& prefix, std::uint64_t seed) {
  nn::TrainConfig t;
  t.learning_rate = c.get_double(prefix + "_lr");
  t.max_epochs = c.get_size(prefix + "_epochs");
  t.batch_size = c.get_size(prefix + "_batch");
  t.early_stop_patience = c.get_size(prefix + "_patience");
  t.validation_fraction = c.get_double("validation_fraction");
  if (c.knows(prefix + "_weight_decay")) t.weight_decay = c.get_double(prefix + "_weight_decay");
  t.seed = seed;
  t.validate();
  return t;
}

struct ModelSettings {
  std::string code;
  Task task = Task::regression;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t m = 40;
  EncoderConfig encoder;
  PredictorConfig predictor;
  nn::TrainConfig predictor_train;
};

ModelSettings model_settings(const RunConfig& c) {
  ModelSettings s;
  s.code = c.get("code");
  if (!is_known_code(s.code)) fail(ErrorKind::invalid_argument, "unknown code '" + s.code + "'");
  s.task = task_from_string(c.get("task"));
  s.seed = c.get_u64("seed");
  s.test_fraction = c.get_double("test_fraction");
  s.m = c.get_size("m");
  if (s.m == 0) fail(ErrorKind::invalid_argument, "--m must be at least 1");
  s.encoder.token_dim = c.get_size("token_dim");
  s.encoder.embedding_dim = c.get_size("embedding_dim");
  s.encoder.max_tokens = c.get_size("max_tokens");
  s.encoder.validate();
  s.predictor.hidden_size = c.get_size("hidden_size");
  s.predictor.attention_size = c.get_size("attention_size");
  s.predictor.max_segments = c.get_size("max_segments");
  s.predictor.task = s.task;
  s.predictor.validate();
  s.predictor_train = train_config(c, "predictor", mix_seed(s.seed, 500));
  return s;
}

RefinementConfig refinement_config(const RunConfig& c, const ModelSettings& s) {
  RefinementConfig r;
  r.iterations = c.get_size("k");
  r.utterances_per_segment = s.m;
  r.code = s.code;
  r.sqe.hidden_size = s.predictor.hidden_size;
  r.sqe.attention_size = s.predictor.attention_size;
  r.sqe.mode = sqe_mode_from_string(c.get("mode"));
  const std::string& alpha = c.get("alpha_override");
  if (alpha != "none" && alpha != "utterance_counts") {
    fail(ErrorKind::invalid_argument, "--alpha-override expects none or utterance_counts, got '" + alpha + "'");
  }
  if (alpha != "none" && r.sqe.mode == SqeMode::uneven) {
    fail(ErrorKind::invalid_argument, "invalid combination: uneven mode learns its weights and takes no --alpha-override");
  }
  r.encoder = s.encoder;
  r.encoder_train = train_config(c, "encoder", 0);
  r.sqe_train = train_config(c, "sqe", 0);
  r.label_clamp = c.get_double("label_clamp");
  r.seed = s.seed;
  r.validate();
  return r;
}

std::vector<double> predictor_targets(std::span<const Session> sessions, const std::string& code, Task task) {
  std::vector<double> targets = session_targets(sessions, code);
  if (task == Task::classification) {
    const ScoreScale scale = ScoreScale::for_code(code);
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      targets[i] = binarize(*sessions[i].labels->score(code), scale) == Binary::high ? 1.0 : 0.0;
    }
  }
  return targets;
}

std::vector<int> raw_scores(std::span<const Session> sessions, const std::string& code) {
  std::vector<int> out;
  for (const auto& s : sessions) {
    const std::optional<int> score = s.labels ? s.labels->score(code) : std::nullopt;
    if (!score) fail(ErrorKind::validation, "session " + s.id + " has no '" + code + "' label");
    out.push_back(*score);
  }
  return out;
}

std::vector<Segment> segment_all(std::span<const Session> sessions, std::size_t m) {
  std::vector<Segment> out;
  const SegmentationConfig cfg{m, {}};
  for (const auto& s : sessions) {
    for (auto& seg : segment_session(s, cfg)) out.push_back(std::move(seg));
  }
  return out;
}

std::vector<SessionEmbeddings> encode_sessions(const EncoderModel& encoder, std::span<const Session> sessions,
                                               std::size_t m) {
  const auto segments = segment_all(sessions, m);
  const auto embeddings = encode_all(encoder, segments);
  return assemble_sessions(segments, embeddings);
}

std::vector<SessionEmbeddings> select_sessions(const std::vector<SessionEmbeddings>& pool,
                                               std::span<const Session> sessions, const std::string& source) {
  std::map<std::string, const SessionEmbeddings*> by_id;
  for (const auto& p : pool) by_id[p.session_id] = &p;
  std::vector<SessionEmbeddings> out;
  for (const auto& s : sessions) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) fail(ErrorKind::validation, source + " has no embeddings for session " + s.id);
    out.push_back(*it->second);
  }
  return out;
}

fs::path resolve_in(const fs::path& run_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : run_dir / path;
}

/// Embeddings for `sessions` according to a run manifest.
std::vector<SessionEmbeddings> run_embeddings(const json& manifest, const fs::path& run_dir,
                                              std::span<const Session> sessions) {
  if (!manifest.at("encoder").is_null()) {
    const EncoderModel encoder =
        EncoderModel::from_checkpoint(nn::Checkpoint::load(resolve_in(run_dir, manifest.at("encoder").get<std::string>())));
    return encode_sessions(encoder, sessions, manifest.at("M").get<std::size_t>());
  }
  const fs::path path = resolve_in(run_dir, manifest.at("embeddings").get<std::string>());
  return select_sessions(assemble_sessions(import_embeddings(path)), sessions, path.string());
}

void write_predictions(const fs::path& path, std::span<const SessionPrediction> predictions, Task task,
                       const ScoreScale& scale) {
  std::string out;
  for (const auto& p : predictions) {
    json j = p.to_json(nullptr);
    if (task == Task::regression) {
      bool clamped = false;
      j["score"] = unrescale(p.score_normalized, scale, &clamped);
      j["probability_high"] = nullptr;
    } else {
      j["score"] = nullptr;
    }
    out += j.dump() + "\n";
  }
  write_text_file(path, out);
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json base_manifest(const std::string& kind, const RunConfig& c, const ModelSettings& s) {
  return {{"kind", kind},
          {"corpus", c.get("corpus")},
          {"code", s.code},
          {"task", to_string(s.task)},
          {"M", s.m},
          {"seed", s.seed},
          {"test_fraction", s.test_fraction},
          {"encoder", nullptr},
          {"embeddings", nullptr},
          {"predictor", kPredictorFile}};
}

void train_and_save_predictor(std::span<const SessionEmbeddings> train, std::span<const Session> sessions,
                              const ModelSettings& s, const fs::path& out) {
  const auto targets = predictor_targets(sessions, s.code, s.task);
  const PredictorTraining trained = train_predictor(train, targets, s.predictor, s.predictor_train);
  nn::Checkpoint ckpt = trained.model.to_checkpoint();
  ckpt.train_meta = {{"history", trained.history.to_json()},
                     {"train", s.predictor_train.to_json()},
                     {"class_weights", {{"low", trained.class_weights.low}, {"high", trained.class_weights.high}}}};
  ckpt.save(out / kPredictorFile);
}

json planted_recovery(const RefinementResult& result, const fs::path& planted_path, std::span<const Session> sessions,
                      std::size_t m) {
  std::map<std::string, const PlantedTruth*> by_id;
  const auto truth = load_planted(planted_path);
  for (const auto& t : truth) by_id[t.session_id] = &t;
  std::map<std::string, std::vector<double>> planted;
  for (const auto& s : sessions) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) fail(ErrorKind::validation, planted_path.string() + " has no entry for session " + s.id);
    planted[s.id] = planted_segment_quality(*it->second, s.utterances.size(), m);
  }
  auto correlate = [&](const SegmentLabelSet& labels) {
    std::vector<double> q, y;
    for (const auto& [key, value] : labels.entries()) {
      q.push_back(planted.at(key.first).at(key.second));
      y.push_back(value);
    }
    return spearman(q, y);
  };
  json passes = json::array();
  for (const auto& pass : result.estimates) {
    SegmentLabelSet labels;
    for (const auto& e : pass) {
      for (std::size_t i = 0; i < e.s_bar_i.size(); ++i) labels.set(e.session_id, i, e.s_bar_i[i]);
    }
    passes.push_back(correlate(labels));
  }
  return {{"spearman_initial", correlate(result.initial_labels)},
          {"spearman_after_pass", passes},
          {"spearman_final", correlate(result.final_labels)}};
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen_corpus(const RunConfig& c) {
  SyntheticSpec spec;
  spec.seed = c.get_u64("seed");
  spec.n_sessions = c.get_size("n_sessions");
  spec.segments_min = c.get_size("segments_min");
  spec.segments_max = c.get_size("segments_max");
  spec.utterances_per_segment = c.get_size("utterances_per_segment");
  spec.words_min = c.get_size("words_min");
  spec.words_max = c.get_size("words_max");
  spec.background_vocab_size = c.get_size("vocab_size");
  spec.keywords = c.get_list("keywords");
  spec.profile = profile_from_string(c.get("profile"));
  spec.noise_std = c.get_double("noise_std");
  spec.keyword_rate = c.get_double("keyword_rate");
  spec.session_quality_min = c.get_double("quality_min");
  spec.session_quality_max = c.get_double("quality_max");
  spec.within_session_std = c.get_double("within_std");
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const fs::path out = c.get_path("out");
  save_sessions(out / "corpus.jsonl", corpus.sessions);
  save_planted(out / "planted.jsonl", corpus.truth);
  c.write_resolved(out);
}

void cmd_train_baseline(const RunConfig& c) {
  const std::string code = c.get("code");
  if (!is_known_code(code)) fail(ErrorKind::invalid_argument, "unknown code '" + code + "'");
  const Task task = task_from_string(c.get("task"));
  const SplitCorpus data = load_split(c.get_path("corpus"), c.get_double("test_fraction"), c.get_u64("seed"));
  if (data.test.empty()) fail(ErrorKind::validation, "no held-out sessions; raise --test-fraction");
  const ScoreScale scale = ScoreScale::for_code(code);

  std::vector<Document> train_docs, test_docs;
  for (const auto& s : data.train) train_docs.push_back(session_document(s));
  for (const auto& s : data.test) test_docs.push_back(session_document(s));
  const TfidfModel tfidf = TfidfModel::fit(train_docs);
  const nn::Tensor x_train = tfidf.transform_all(train_docs);
  const nn::Tensor x_test = tfidf.transform_all(test_docs);
  const auto train_scores = raw_scores(data.train, code);
  const auto test_scores = raw_scores(data.test, code);

  LinearModel model;
  MetricsRecord metrics;
  std::string predictions;
  if (task == Task::regression) {
    std::vector<double> y(train_scores.begin(), train_scores.end());
    model = train_linear_regression(x_train, y, c.get_double("ridge_lambda"));
    std::vector<double> pred, truth(test_scores.begin(), test_scores.end());
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      const double raw = model.decision(x_test.row(i));
      const double v = std::clamp(raw, 0.0, static_cast<double>(scale.full_scale));
      clamped += v != raw;
      pred.push_back(v);
      predictions += json{{"session_id", data.test[i].id}, {"score", v}}.dump() + "\n";
    }
    metrics = regression_metrics(pred, truth);
    metrics.n_clamped = clamped;
  } else {
    std::vector<Binary> labels;
    std::size_t high = 0;
    for (int s : train_scores) {
      labels.push_back(binarize(s, scale));
      high += labels.back() == Binary::high;
    }
    const auto weights = nn::ClassWeights::from_counts(labels.size() - high, high);
    HingeConfig hinge;
    hinge.lambda = c.get_double("hinge_lambda");
    hinge.iterations = c.get_size("hinge_iterations");
    hinge.step0 = c.get_double("hinge_step");
    model = train_linear_classifier(x_train, labels, weights, hinge);
    std::vector<Binary> pred, truth;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      pred.push_back(classify(model, x_test.row(i)));
      truth.push_back(binarize(test_scores[i], scale));
      predictions += json{{"session_id", data.test[i].id}, {"label", to_string(pred.back())},
                          {"decision", model.decision(x_test.row(i))}}.dump() + "\n";
    }
    metrics = classification_metrics(pred, truth);
  }
  const fs::path out = c.get_path("out");
  write_json(out / "baseline.json",
             {{"code", code}, {"task", to_string(task)}, {"tfidf", tfidf.to_json()}, {"model", model.to_json()}});
  write_json(out / "metrics.json", metrics.to_json());
  write_text_file(out / "predictions.jsonl", predictions);
  c.write_resolved(out);
}

/// Refinement plus predictor training into `out`.
void refine_into(const RunConfig& c, const ModelSettings& s, const fs::path& out) {
  const SplitCorpus data = load_split(c.get_path("corpus"), s.test_fraction, s.seed);
  json manifest = base_manifest("refine", c, s);
  const std::size_t k = c.get_size("k");
  manifest["K"] = k;
  manifest["mode"] = c.get("mode");
  ensure_directory(out);

  if (c.is_set("embeddings")) {
    if (k > 0) {
      fail(ErrorKind::invalid_argument,
           "invalid combination: static embeddings cannot be re-fine-tuned, so --embeddings requires --k 0");
    }
    const fs::path path = c.get_path("embeddings");
    const auto train = select_sessions(assemble_sessions(import_embeddings(path)), data.train, path.string());
    train_and_save_predictor(train, data.train, s, out);
    manifest["embeddings"] = fs::absolute(path).lexically_normal().string();
  } else {
    const RefinementConfig rcfg = refinement_config(c, s);
    const RefinementResult result = run_refinement(data.train, rcfg, out);
    for (std::size_t pass = 0; pass < result.estimates.size(); ++pass) {
      std::string lines;
      for (const auto& e : result.estimates[pass]) lines += e.to_json().dump() + "\n";
      write_text_file(out / ("iter_" + std::to_string(pass)) / "estimates.jsonl", lines);
    }
    if (c.is_set("planted")) {
      write_json(out / "planted.json", planted_recovery(result, c.get_path("planted"), data.train, s.m));
    }
    const auto train = assemble_sessions(result.segments, encode_all(result.encoder, result.segments));
    train_and_save_predictor(train, data.train, s, out);
    manifest["encoder"] = "iter_" + std::to_string(k) + "/encoder.ckpt.json";
  }
  write_json(out / kManifest, manifest);
  c.write_resolved(out);
}

void cmd_refine(const RunConfig& c) { refine_into(c, model_settings(c), c.get_path("out")); }

void cmd_train_predictor(const RunConfig& c) {
  const ModelSettings s = model_settings(c);
  const bool has_embeddings = c.is_set("embeddings");
  if (has_embeddings == c.is_set("encoder")) {
    fail(ErrorKind::invalid_argument, "train-predictor needs exactly one of --embeddings or --encoder");
  }
  const SplitCorpus data = load_split(c.get_path("corpus"), s.test_fraction, s.seed);
  const fs::path out = c.get_path("out");
  ensure_directory(out);
  json manifest = base_manifest("predictor", c, s);
  std::vector<SessionEmbeddings> train;
  if (has_embeddings) {
    const fs::path path = c.get_path("embeddings");
    train = select_sessions(assemble_sessions(import_embeddings(path)), data.train, path.string());
    manifest["embeddings"] = fs::absolute(path).lexically_normal().string();
  } else {
    const fs::path path = c.get_path("encoder");
    train = encode_sessions(EncoderModel::from_checkpoint(nn::Checkpoint::load(path)), data.train, s.m);
    manifest["encoder"] = fs::absolute(path).lexically_normal().string();
  }
  train_and_save_predictor(train, data.train, s, out);
  write_json(out / kManifest, manifest);
  c.write_resolved(out);
}

void write_evaluation(const RunEvaluation& e, const fs::path& out) {
  const std::string code = e.manifest.at("code").get<std::string>();
  const Task task = task_from_string(e.manifest.at("task").get<std::string>());
  write_json(out / "metrics.json", e.metrics.to_json());
  write_predictions(out / "predictions.jsonl", e.predictions, task, ScoreScale::for_code(code));
}

void cmd_evaluate(const RunConfig& c) {
  const fs::path out = c.get_path("out");
  const RunEvaluation e = evaluate_run(c.get_path("run"), c.get_path("corpus"));
  write_evaluation(e, out);
  c.write_resolved(out);
}

std::size_t longest_session(const fs::path& corpus, std::size_t m) {
  std::size_t most = 0;
  for (const auto& s : load_sessions(corpus)) most = std::max(most, (s.utterances.size() + m - 1) / m);
  return most;
}

void cmd_sweep_m(const RunConfig& c) {
  const std::vector<std::size_t> ms = c.get_size_list("m_list");
  if (ms.empty()) fail(ErrorKind::invalid_argument, "--m-list is empty");
  for (std::size_t m : ms) {
    if (m == 0) fail(ErrorKind::invalid_argument, "--m-list values must be at least 1");
  }
  const fs::path out = c.get_path("out");
  ensure_directory(out);
  std::size_t threads = c.get_size("threads");
  threads = std::min(threads == 0 ? thread_limit() : threads, thread_limit());
  threads = std::max<std::size_t>(1, std::min(threads, ms.size()));

  std::vector<ReportRow> rows(ms.size());
  std::vector<std::exception_ptr> errors(ms.size());
  std::mutex next_mutex;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next == ms.size()) return;
        i = next++;
      }
      try {
        RunConfig sub = c;
        sub.set("m", std::to_string(ms[i]));
        const std::size_t needed = longest_session(c.get_path("corpus"), ms[i]);
        sub.set("max_segments", std::to_string(std::max(c.get_size("max_segments"), needed)));
        const fs::path run_dir = out / ("m_" + std::to_string(ms[i]));
        const ModelSettings s = model_settings(sub);
        refine_into(sub, s, run_dir);
        const RunEvaluation e = evaluate_run(run_dir);
        write_evaluation(e, run_dir / "eval");
        rows[i] = {"hierarchical", s.code, to_string(s.task), ms[i], c.get_size("k"), c.get("mode"), e.metrics};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "sweep M=" + std::to_string(ms[i]) + ": " + e.what());
    }
  }
  write_text_file(out / "sweep.csv", metrics_csv(rows));
  c.write_resolved(out);
}

std::vector<std::string> selected_words(const std::vector<Session>& train, const std::string& code,
                                        std::size_t candidates, std::size_t k_keep, double lambda, json& record) {
  // Term-frequency columns (count / length). Words present in every session
  // have zero idf, so tf-idf would erase them.
  std::map<std::string, std::vector<double>> tf;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Document doc = session_document(train[i]);
    for (const auto& token : doc) {
      auto& col = tf[token];
      if (col.empty()) col.assign(train.size(), 0.0);
      col[i] += 1.0 / static_cast<double>(doc.size());
    }
  }
  const auto scores = raw_scores(train, code);
  const std::vector<double> y(scores.begin(), scores.end());

  struct Candidate {
    double strength;
    std::string word;
    std::vector<double> column;
  };
  std::vector<Candidate> pool;
  for (auto& [word, col] : tf) {
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; })) continue;
    pool.push_back({std::abs(spearman(col, y)), word, std::move(col)});
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    return a.strength != b.strength ? a.strength > b.strength : a.word < b.word;
  });
  if (pool.size() > candidates) pool.resize(candidates);
  std::vector<std::string> words;
  std::vector<std::vector<double>> columns;
  json cand = json::array();
  for (const auto& p : pool) {
    words.push_back(p.word);
    columns.push_back(p.column);
    cand.push_back({{"word", p.word}, {"abs_spearman", p.strength}});
  }
  const auto selected = backward_selection(words, columns, y, std::min(k_keep, words.size()), lambda);
  record = {{"candidates", cand}, {"selected", selected}};
  return selected;
}

void cmd_analyze(const RunConfig& c) {
  const fs::path out = c.get_path("out");
  const std::size_t n_segments = c.get_size("n_segments");
  const GroupBy by = group_by_from_string(c.get("group_by"));
  Report report;
  json selections = json::object();
  for (const auto& run : c.get_list("run")) {
    const fs::path run_dir(run);
    const json manifest = json::parse(read_text_file(run_dir / kManifest));
    const std::string code = manifest.at("code").get<std::string>();
    const fs::path corpus = c.is_set("corpus") ? c.get_path("corpus") : fs::path(manifest.at("corpus").get<std::string>());
    const SplitCorpus data =
        load_split(corpus, manifest.at("test_fraction").get<double>(), manifest.at("seed").get<std::uint64_t>());

    // attention over every session
    std::vector<Session> all = data.train;
    all.insert(all.end(), data.test.begin(), data.test.end());
    const PredictorModel predictor =
        PredictorModel::from_checkpoint(nn::Checkpoint::load(run_dir / manifest.at("predictor").get<std::string>()));
    std::vector<std::vector<double>> alphas;
    for (const auto& p : predict_sessions(predictor, run_embeddings(manifest, run_dir, all))) {
      alphas.emplace_back(p.attention.begin(), p.attention.begin() + static_cast<std::ptrdiff_t>(p.n_segments));
    }
    report.traces.push_back(attention_trace(alphas, n_segments, code));

    const RunEvaluation e = evaluate_run(run_dir, corpus);
    report.metrics.push_back({manifest.at("kind").get<std::string>() == "refine" ? "hierarchical" : "predictor", code,
                              manifest.at("task").get<std::string>(), manifest.at("M").get<std::size_t>(),
                              manifest.value("K", std::size_t{0}), manifest.value("mode", std::string("even")),
                              e.metrics});

    std::vector<std::string> words = c.get_list("words");
    if (words.empty()) {
      json record;
      words = selected_words(data.train, code, c.get_size("candidates"), c.get_size("k_keep"),
                             c.get_double("ridge_lambda"), record);
      selections[code] = record;
    }
    const std::size_t k = manifest.value("K", std::size_t{0});
    if (manifest.at("kind") != "refine" || k == 0) {
      log::warn("run " + run + " has no refined estimates; skipping segment groups");
      continue;
    }
    std::vector<LocalEstimates> estimates;
    for (const auto& line : read_lines(run_dir / ("iter_" + std::to_string(k - 1)) / "estimates.jsonl")) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      LocalEstimates le;
      le.session_id = j.at("session_id").get<std::string>();
      le.alpha = j.at("alpha").get<std::vector<double>>();
      le.s_hat_i = j.at("s_hat_i").get<std::vector<double>>();
      le.s_hat = j.at("s_hat").get<double>();
      le.s_bar_i = j.at("s_bar_i").get<std::vector<double>>();
      le.s_true = j.at("s_true").get<double>();
      estimates.push_back(std::move(le));
    }
    const auto groups = group_segments(estimates, by);
    const auto segments = segment_all(data.train, manifest.at("M").get<std::size_t>());
    report.groups[code] = term_frequency_compare(collect_group_tokens(segments, groups), words);
  }
  emit_report(report, out);
  if (!selections.empty()) write_json(out / "selection.json", selections);
  c.write_resolved(out);
}

}  // namespace

RunEvaluation evaluate_run(const fs::path& run_dir, const fs::path& corpus) {
  RunEvaluation e;
  try {
    e.manifest = json::parse(read_text_file(run_dir / kManifest));
    const std::string code = e.manifest.at("code").get<std::string>();
    const Task task = task_from_string(e.manifest.at("task").get<std::string>());
    const fs::path corpus_path = corpus.empty() ? fs::path(e.manifest.at("corpus").get<std::string>()) : corpus;
    const SplitCorpus data = load_split(corpus_path, e.manifest.at("test_fraction").get<double>(),
                                        e.manifest.at("seed").get<std::uint64_t>());
    if (data.test.empty()) fail(ErrorKind::validation, "run has no held-out sessions to evaluate");
    const PredictorModel predictor =
        PredictorModel::from_checkpoint(nn::Checkpoint::load(run_dir / e.manifest.at("predictor").get<std::string>()));
    e.predictions = predict_sessions(predictor, run_embeddings(e.manifest, run_dir, data.test));
    e.metrics = evaluate_predictions(e.predictions, raw_scores(data.test, code), task, ScoreScale::for_code(code));
  } catch (const json::exception& ex) {
    fail(ErrorKind::parse, (run_dir / kManifest).string() + ": " + ex.what());
  }
  return e;
}

void run_command(const RunConfig& config) {
  config.check_required();
  const std::string& cmd = config.command();
  if (cmd == "gen-corpus") return cmd_gen_corpus(config);
  if (cmd == "train-baseline") return cmd_train_baseline(config);
  if (cmd == "refine") return cmd_refine(config);
  if (cmd == "train-predictor") return cmd_train_predictor(config);
  if (cmd == "evaluate") return cmd_evaluate(config);
  if (cmd == "sweep-m") return cmd_sweep_m(config);
  if (cmd == "analyze") return cmd_analyze(config);
  fail(ErrorKind::invalid_argument, "unknown command '" + cmd + "'");
}

}  // namespace hierseg
