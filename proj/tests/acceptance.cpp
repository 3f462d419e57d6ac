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

// Acceptance harness: one PASS/FAIL line per criterion. Criteria 1-4 and 7
// run in-process; the experiment criteria drive the command-line tool.
//
//   hierseg_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "hierseg/analysis.hpp"
#include "hierseg/baselines.hpp"
#include "hierseg/io.hpp"
#include "hierseg/log.hpp"
#include "hierseg/metrics.hpp"
#include "hierseg/nn/layers.hpp"
#include "hierseg/nn/loss.hpp"
#include "hierseg/predictor.hpp"
#include "hierseg/sqe.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hierseg;

namespace {

const fs::path kScratch = HIERSEG_ACCEPTANCE_SCRATCH;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

// ---------------------------------------------------------------------------
// Command-line helpers

void cli(const std::string& args) {
  const fs::path log = kScratch / "cli_output.txt";
  const std::string command =
      std::string("\"") + HIERSEG_CLI_PATH + "\" --log-level 3 " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::string message = read_text_file(log);
    while (!message.empty() && message.back() == '\n') message.pop_back();
    throw std::runtime_error("command failed: hierseg " + args + ": " + message);
  }
}

json read_json(const fs::path& path) { return json::parse(read_text_file(path)); }

fs::path fresh(const fs::path& dir) {
  fs::remove_all(dir);
  return dir;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string join(const std::vector<double>& v, int digits = 3) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : "/") + fmt(x, digits);
  return out;
}

// ---------------------------------------------------------------------------
// 1, 2: shift-correction identity and decomposition on refinement output

struct RefinementIdentities {
  std::size_t sessions = 0;
  std::size_t checks = 0;
  double identity = 0.0;
  double decomposition = 0.0;
};

const RefinementIdentities& refinement_identities() {
  static const RefinementIdentities result = [] {
    RefinementIdentities r;
    SyntheticSpec spec;
    spec.n_sessions = 120;
    spec.segments_min = 3;
    spec.segments_max = 8;
    spec.utterances_per_segment = 20;
    spec.background_vocab_size = 120;
    spec.profile = QualityProfile::early_peaked;
    spec.seed = 101;
    const auto corpus = generate_synthetic_corpus(spec);
    r.sessions = corpus.sessions.size();
    for (SqeMode mode : {SqeMode::even, SqeMode::uneven}) {
      RefinementConfig cfg;
      cfg.iterations = 2;
      cfg.utterances_per_segment = 20;
      cfg.encoder.token_dim = 8;
      cfg.encoder.embedding_dim = 8;
      cfg.sqe.hidden_size = 8;
      cfg.sqe.attention_size = 8;
      cfg.sqe.mode = mode;
      cfg.encoder_train.max_epochs = 3;
      cfg.sqe_train.max_epochs = 10;
      cfg.seed = 11;
      const auto out = run_refinement(corpus.sessions, cfg);
      for (const auto& pass : out.estimates) {
        for (const auto& e : pass) {
          double weighted_bar = 0.0, weighted_hat = 0.0;
          for (std::size_t i = 0; i < e.alpha.size(); ++i) {
            weighted_bar += e.alpha[i] * e.s_bar_i[i];
            weighted_hat += e.alpha[i] * e.s_hat_i[i];
          }
          r.identity = std::max(r.identity, std::abs(weighted_bar - e.s_true));
          r.decomposition = std::max(r.decomposition, std::abs(e.s_hat - weighted_hat));
          ++r.checks;
        }
      }
    }
    return r;
  }();
  return result;
}

Verdict criterion_1() {
  const auto& r = refinement_identities();
  Verdict v;
  v.pass = r.sessions >= 100 && r.checks >= 2 * 2 * r.sessions && r.identity < 1e-9;
  v.detail = "max |sum alpha s_bar - s| = " + format_double(r.identity) + " over " + std::to_string(r.checks) +
             " session-passes (" + std::to_string(r.sessions) + " sessions, 2 modes, 2 passes)";
  return v;
}

Verdict criterion_2() {
  const auto& r = refinement_identities();
  Verdict v;
  v.pass = r.checks >= 2 * 2 * r.sessions && r.decomposition < 1e-9;
  v.detail = "max |s_hat - sum alpha s_hat_i| = " + format_double(r.decomposition) + " over " +
             std::to_string(r.checks) + " trained-model estimates";
  return v;
}

// ---------------------------------------------------------------------------
// 3: finite differences for every layer and loss

double projected(const nn::Tensor& t, const std::vector<double>& r) { return test::dot(t.values(), r); }

void zero_all(const std::vector<nn::Parameter*>& params) {
  for (auto* p : params) p->zero_grad();
}

void randomize_biases(const std::vector<nn::Parameter*>& params, Rng& rng) {
  for (auto* p : params) {
    if (p->value.rank() == 1) {
      for (double& b : p->value.values()) b = rng.uniform(-0.5, 0.5);
    }
  }
}

Verdict criterion_3() {
  std::map<std::string, double> worst;
  std::size_t cases = 0;
  auto note = [&](const std::string& what, double err) {
    worst[what] = std::max(worst[what], err);
    ++cases;
  };
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(mix_seed(seed, 3));
    const std::size_t in = rng.between(1, 5), out = rng.between(1, 4), T = rng.between(1, 6), H = rng.between(1, 4);

    for (auto act : {nn::Activation::linear, nn::Activation::tanh, nn::Activation::sigmoid}) {
      nn::Dense d("d", in, out, act);
      d.initialize(rng);
      randomize_biases(d.parameters(), rng);
      nn::Tensor x = test::random_tensor({T, in}, rng);
      const auto r = test::random_vector(T * out, rng);
      zero_all(d.parameters());
      nn::DenseCache cache;
      d.forward(x, &cache);
      const nn::Tensor dx = d.backward(nn::Tensor({T, out}, std::vector<double>(r)), cache);
      auto loss = [&] { return projected(d.forward(x), r); };
      note("dense", test::max_param_fd_error(d.parameters(), loss));
      note("dense", test::max_fd_error(x.values(), dx.values(), loss));
    }

    {
      nn::BiLstm lstm("l", in, H);
      lstm.initialize(rng);
      randomize_biases(lstm.parameters(), rng);
      nn::Tensor x = test::random_tensor({T, in}, rng);
      nn::Mask mask(T, 1);
      for (std::size_t t = 1; t < T; ++t) mask[t] = rng.uniform() < 0.8;
      const auto r = test::random_vector(T * 2 * H, rng);
      zero_all(lstm.parameters());
      nn::BiLstmCache cache;
      lstm.forward(x, mask, &cache);
      const nn::Tensor dx = lstm.backward(nn::Tensor({T, 2 * H}, std::vector<double>(r)), cache);
      auto loss = [&] { return projected(lstm.forward(x, mask), r); };
      note("bilstm", test::max_param_fd_error(lstm.parameters(), loss));
      note("bilstm", test::max_fd_error(x.values(), dx.values(), loss));
    }

    {
      const std::size_t A = rng.between(1, 5);
      nn::AdditiveAttention att("a", in, A);
      att.initialize(rng);
      randomize_biases(att.parameters(), rng);
      nn::Tensor h = test::random_tensor({T, in}, rng);
      nn::Mask mask(T, 1);
      for (std::size_t t = 1; t < T; ++t) mask[t] = rng.uniform() < 0.8;
      const auto r = test::random_vector(in, rng);
      zero_all(att.parameters());
      nn::AttentionCache cache;
      att.forward(h, mask, &cache);
      const nn::Tensor dh = att.backward(r, cache);
      auto loss = [&] { return test::dot(att.forward(h, mask).pooled.values(), r); };
      note("attention", test::max_param_fd_error(att.parameters(), loss));
      note("attention", test::max_fd_error(h.values(), dh.values(), loss));
    }

    {
      auto pred = test::random_vector(out, rng);
      const auto target = test::random_vector(out, rng);
      const auto grad = nn::mse(pred, target).grad;
      note("mse", test::max_fd_error(pred, grad, [&] { return nn::mse(pred, target).value; }));
      const nn::ClassWeights w{rng.uniform(0.2, 3), rng.uniform(0.2, 3)};
      std::vector<double> logit{rng.uniform(-4, 4)};
      const bool high = rng.uniform() < 0.5;
      const std::vector<double> g{nn::weighted_cross_entropy(logit[0], high, w).grad};
      note("cross_entropy",
           test::max_fd_error(logit, g, [&] { return nn::weighted_cross_entropy(logit[0], high, w).value; }));
    }

    for (Task task : {Task::regression, Task::classification}) {
      PredictorConfig cfg;
      cfg.hidden_size = H;
      cfg.attention_size = rng.between(1, 4);
      cfg.max_segments = T + 1;
      cfg.task = task;
      PredictorModel m(in, cfg, seed);
      randomize_biases(m.parameters(), rng);
      const nn::Tensor x = test::random_tensor({T + 1, in}, rng);
      nn::Mask mask(T + 1, 1);
      mask[T] = 0;
      const nn::ClassWeights w{0.7, 1.9};
      const double target = task == Task::regression ? rng.uniform(-1, 1) : static_cast<double>(seed % 2);
      zero_all(m.parameters());
      m.loss_and_grad(x, mask, target, w, 1.0);
      note("predictor", test::max_param_fd_error(m.parameters(), [&] { return m.loss(x, mask, target, w); }));
    }

    for (SqeMode mode : {SqeMode::even, SqeMode::uneven}) {
      SqeConfig cfg;
      cfg.hidden_size = H;
      cfg.attention_size = rng.between(1, 4);
      cfg.mode = mode;
      SqeModel m(in, cfg, seed);
      randomize_biases(m.parameters(), rng);
      SessionEmbeddings s;
      s.session_id = "s";
      s.segments = test::random_tensor({T, in}, rng);
      for (std::size_t t = 0; t < T; ++t) s.utterance_counts.push_back(rng.between(1, 40));
      const double target = rng.uniform(-1, 1);
      zero_all(m.parameters());
      m.loss_and_grad(s, target, 1.0);
      note("sqe", test::max_param_fd_error(m.parameters(), [&] { return m.loss(s, target); }));
    }
  }
  double overall = 0.0;
  std::string parts;
  for (const auto& [name, err] : worst) {
    overall = std::max(overall, err);
    parts += (parts.empty() ? "" : ", ") + name + " " + format_double(err);
  }
  return {overall < 1e-4 && worst.size() == 7,
          "max relative error " + format_double(overall) + " over " + std::to_string(cases) +
              " checks, 20 seeds with random shapes (" + parts + ")"};
}

// ---------------------------------------------------------------------------
// 4: masking contract

std::vector<double> grads_of(const std::vector<nn::Parameter*>& params) {
  std::vector<double> out;
  for (auto* p : params) out.insert(out.end(), p->grad.storage().begin(), p->grad.storage().end());
  return out;
}

Verdict criterion_4() {
  std::size_t trials = 0, mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(mix_seed(seed, 4));
    const std::size_t d = rng.between(2, 6), cap = rng.between(4, 12), live = rng.between(1, cap - 1);
    nn::Tensor x = test::random_tensor({cap, d}, rng);
    nn::Mask mask(cap, 0);
    for (std::size_t t = 0; t < live; ++t) mask[t] = 1;
    nn::Tensor y = x;
    for (std::size_t t = live; t < cap; ++t) {
      for (std::size_t j = 0; j < d; ++j) y.at(t, j) = rng.uniform(-100, 100);
    }

    for (Task task : {Task::regression, Task::classification}) {
      PredictorConfig cfg;
      cfg.hidden_size = 3;
      cfg.attention_size = 3;
      cfg.max_segments = cap;
      cfg.task = task;
      PredictorModel m(d, cfg, seed);
      const nn::ClassWeights w{0.8, 1.6};
      const double target = task == Task::regression ? 0.25 : 1.0;
      auto probe = [&](const nn::Tensor& in) {
        const auto p = m.predict_padded(in, mask);
        zero_all(m.parameters());
        const double l = m.loss_and_grad(in, mask, target, w, 1.0);
        std::vector<double> out{p.output, p.score_normalized, p.probability_high, l, m.loss(in, mask, target, w)};
        out.insert(out.end(), p.attention.begin(), p.attention.end());
        const auto g = grads_of(m.parameters());
        out.insert(out.end(), g.begin(), g.end());
        return out;
      };
      ++trials;
      mismatches += probe(x) != probe(y);
    }

    for (SqeMode mode : {SqeMode::even, SqeMode::uneven}) {
      SqeConfig cfg;
      cfg.hidden_size = 3;
      cfg.attention_size = 3;
      cfg.mode = mode;
      SqeModel m(d, cfg, seed);
      std::vector<double> alpha;
      if (mode == SqeMode::even) {
        alpha.assign(cap, 0.0);
        for (std::size_t t = 0; t < live; ++t) alpha[t] = 1.0 / static_cast<double>(live);
      }
      auto probe = [&](const nn::Tensor& in) {
        const auto f = m.forward(in, mask, alpha);
        const double l = (f.s_hat - 0.3) * (f.s_hat - 0.3);
        std::vector<double> out{f.s_hat, l};
        out.insert(out.end(), f.alpha.begin(), f.alpha.end());
        const auto parts = m.decompose(f.hidden, f.alpha);
        out.insert(out.end(), parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(live));
        return out;
      };
      ++trials;
      mismatches += probe(x) != probe(y);
    }
  }
  return {mismatches == 0, std::to_string(trials) + " predictor/SQE trials with random padded contents, " +
                               std::to_string(mismatches) + " with any bitwise difference in output, alpha, loss or gradient"};
}

// ---------------------------------------------------------------------------
// 7: baseline correctness

Verdict criterion_7() {
  const std::vector<Document> docs{{"agenda", "agenda", "homework"}, {"homework"}};
  const auto tfidf = TfidfModel::fit(docs);
  const auto x0 = tfidf.transform_dense(docs[0]);
  const auto x1 = tfidf.transform_dense(docs[1]);
  const double expected_agenda = (2.0 / 3.0) * std::log(2.0);
  const double tfidf_err = std::max({std::abs(x0[*tfidf.column("agenda")] - expected_agenda),
                                     std::abs(x0[*tfidf.column("homework")]), std::abs(x1[*tfidf.column("agenda")]),
                                     std::abs(x1[*tfidf.column("homework")])});

  using B = Binary;
  const std::vector<B> truth{B::low, B::low, B::high, B::high};
  const std::vector<B> pred{B::low, B::high, B::high, B::high};
  const double f1_err = std::abs(macro_f1(pred, truth) - 11.0 / 15.0);

  double normal_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(mix_seed(seed, 7));
    const std::size_t n = rng.between(5, 40), d = rng.between(1, 8);
    nn::Tensor x({n, d});
    std::vector<double> y(n);
    for (double& v : x.values()) v = rng.uniform(-1, 1);
    for (double& v : y) v = rng.uniform(-2, 2);
    const double lambda = rng.uniform(0.01, 3.0);
    const auto m = train_linear_regression(x, y, lambda, false);
    for (std::size_t a = 0; a < d; ++a) {
      double lhs = lambda * m.weights[a], rhs = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        rhs += x.at(i, a) * y[i];
        for (std::size_t b = 0; b < d; ++b) lhs += x.at(i, a) * x.at(i, b) * m.weights[b];
      }
      normal_err = std::max(normal_err, std::abs(lhs - rhs));
    }
  }
  return {tfidf_err < 1e-12 && f1_err < 1e-12 && normal_err < 1e-8,
          "tf-idf error " + format_double(tfidf_err) + ", macro-F1 error " + format_double(f1_err) +
              ", max normal-equation residual " + format_double(normal_err) + " over 20 systems"};
}

// ---------------------------------------------------------------------------
// 5: refinement recovers local structure

std::string keyword_list(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "kw%02zu", i);
    out += (out.empty() ? "" : ",") + std::string(buf);
  }
  return out;
}

Verdict criterion_5() {
  const fs::path root = fresh(kScratch / "c5");
  std::vector<double> rmse0, rmse1, sp_init, sp_final;
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string s = std::to_string(seed);
    const fs::path corpus = root / ("corpus_" + s);
    cli("gen-corpus --out " + corpus.string() + " --profile early_peaked --n-sessions 200 --noise-std 0.1 --seed " + s +
        " --keywords " + keyword_list(20));
    for (int k = 0; k <= 1; ++k) {
      const fs::path run = root / ("run_" + s + "_k" + std::to_string(k));
      cli("refine --corpus " + (corpus / "corpus.jsonl").string() + " --planted " + (corpus / "planted.jsonl").string() +
          " --k " + std::to_string(k) + " --mode even --seed " + s + " --out " + run.string());
      cli("evaluate --run " + run.string() + " --out " + (run / "eval").string());
      const double rmse = read_json(run / "eval" / "metrics.json").at("rmse").get<double>();
      (k == 0 ? rmse0 : rmse1).push_back(rmse);
      if (k == 1) {
        const auto planted = read_json(run / "planted.json");
        sp_init.push_back(planted.at("spearman_initial").get<double>());
        sp_final.push_back(planted.at("spearman_final").get<double>());
      }
    }
  }
  const bool a = mean(rmse1) < mean(rmse0);
  const bool b = mean(sp_final) >= 0.5 && mean(sp_final) > mean(sp_init);
  return {a && b, "test RMSE K=0 " + fmt(mean(rmse0)) + " vs K=1 " + fmt(mean(rmse1)) + " (" + join(rmse0) + " vs " +
                      join(rmse1) + "); Spearman initial " + fmt(mean(sp_init)) + " -> refined " + fmt(mean(sp_final)) +
                      "; 5 seeds, 200 sessions"};
}

// ---------------------------------------------------------------------------
// 6, 8: uneven-mode runs on early-peaked and flat corpora

fs::path uneven_run(const std::string& profile, int seed) {
  return kScratch / "c6" / (profile + "_run_" + std::to_string(seed));
}

void ensure_uneven_runs() {
  static bool done = false;
  if (done) return;
  const fs::path root = fresh(kScratch / "c6");
  for (const std::string profile : {"early_peaked", "flat"}) {
    for (int seed = 1; seed <= 5; ++seed) {
      const std::string s = std::to_string(seed);
      const fs::path corpus = root / (profile + "_corpus_" + s);
      cli("gen-corpus --out " + corpus.string() + " --profile " + profile + " --n-sessions 200 --seed " + s);
      cli("refine --corpus " + (corpus / "corpus.jsonl").string() + " --k 1 --mode uneven --seed " + s + " --out " +
          uneven_run(profile, seed).string());
    }
  }
  done = true;
}

constexpr std::size_t kTraceSegments = 10;

AttentionTrace sqe_trace(const std::string& profile, std::vector<AttentionTrace>* per_seed) {
  std::vector<std::vector<double>> all;
  for (int seed = 1; seed <= 5; ++seed) {
    std::vector<std::vector<double>> alphas;
    for (const auto& line : read_lines(uneven_run(profile, seed) / "iter_0" / "estimates.jsonl")) {
      if (line.empty()) continue;
      alphas.push_back(json::parse(line).at("alpha").get<std::vector<double>>());
    }
    per_seed->push_back(attention_trace(alphas, kTraceSegments, profile));
    all.insert(all.end(), alphas.begin(), alphas.end());
  }
  return attention_trace(all, kTraceSegments, profile);
}

double head_mean(const std::vector<double>& a) { return (a[0] + a[1]) / 2.0; }
double tail_mean(const std::vector<double>& a) { return (a[a.size() - 1] + a[a.size() - 2]) / 2.0; }

Verdict criterion_6() {
  ensure_uneven_runs();
  std::vector<AttentionTrace> early_seeds, flat_seeds;
  const auto early = sqe_trace("early_peaked", &early_seeds);
  const auto flat = sqe_trace("flat", &flat_seeds);
  const double n = static_cast<double>(kTraceSegments);
  double max_dev = 0.0;
  for (double a : flat.mean_alpha) max_dev = std::max(max_dev, std::abs(a - 1.0 / n));
  std::vector<double> heads, tails;
  for (const auto& t : early_seeds) {
    heads.push_back(head_mean(t.mean_alpha));
    tails.push_back(tail_mean(t.mean_alpha));
  }
  const bool pass = head_mean(early.mean_alpha) > tail_mean(early.mean_alpha) && max_dev < 0.5 / n;
  return {pass, "early_peaked first-2 mean alpha " + fmt(head_mean(early.mean_alpha)) + " vs last-2 " +
                    fmt(tail_mean(early.mean_alpha)) + " (per seed " + join(heads) + " vs " + join(tails) + ", " +
                    std::to_string(early.n_sessions) + " sessions); flat max deviation " + fmt(max_dev) +
                    " (bound " + fmt(0.5 / n) + ", " + std::to_string(flat.n_sessions) + " sessions); " +
                    std::to_string(kTraceSegments) + "-segment sessions, 5 seeds"};
}

Verdict criterion_8() {
  ensure_uneven_runs();
  const std::set<std::string> planted{"agenda", "evidence", "feeling", "helpful", "homework"};
  double min_ratio = INFINITY;
  bool ratios_ok = true, subset_ok = true;
  std::string selections;
  for (int seed = 1; seed <= 5; ++seed) {
    const fs::path run = uneven_run("early_peaked", seed);
    const fs::path out = fresh(kScratch / "c8" / ("analysis_" + std::to_string(seed)));
    cli("analyze --run " + run.string() + " --out " + out.string() + " --k-keep 5");
    const auto lines = read_lines(out / "groups_total.csv");
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      std::stringstream ss(lines[i]);
      std::string word, low, high, ratio;
      std::getline(ss, word, ',');
      std::getline(ss, low, ',');
      std::getline(ss, high, ',');
      std::getline(ss, ratio, ',');
      seen.insert(word);
      const double r = ratio == "inf" ? INFINITY : ratio == "undefined" ? 0.0 : std::stod(ratio);
      min_ratio = std::min(min_ratio, r);
      if (!(r > 1.0)) ratios_ok = false;
    }
    if (seen != planted) ratios_ok = false;
    const auto selected = read_json(out / "selection.json").at("total").at("selected").get<std::vector<std::string>>();
    std::string names;
    for (const auto& w : selected) {
      names += (names.empty() ? "" : " ") + w;
      if (!planted.count(w)) subset_ok = false;
    }
    if (selected.size() != planted.size()) subset_ok = false;
    selections += (selections.empty() ? "" : "; ") + names;
  }
  return {ratios_ok && subset_ok, "smallest high50/low50 keyword ratio " + fmt(min_ratio, 3) +
                                      " over 5 keywords x 5 seeds; backward selection with k_keep 5: " + selections};
}

// ---------------------------------------------------------------------------
// 9: segment-length sweep

std::map<std::size_t, double> sweep_rmse(const fs::path& csv, std::size_t* rows) {
  std::map<std::size_t, double> out;
  const auto lines = read_lines(csv);
  *rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(lines[i]);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    // approach,code,task,M,K,mode,rmse,...
    out[std::stoul(cells.at(3))] = std::stod(cells.at(6));
    ++*rows;
  }
  return out;
}

Verdict criterion_9() {
  const fs::path root = fresh(kScratch / "c9");
  std::vector<double> m1, m40;
  std::size_t full_rows = 0;
  for (int seed = 11; seed <= 15; ++seed) {
    const std::string s = std::to_string(seed);
    const fs::path corpus = root / ("corpus_" + s);
    const fs::path out = root / ("sweep_" + s);
    cli("gen-corpus --out " + corpus.string() + " --profile early_peaked --n-sessions 100 --seed " + s);
    const std::string list = seed == 11 ? "1,5,20,40,80" : "1,40";
    cli("sweep-m --corpus " + (corpus / "corpus.jsonl").string() + " --m-list " + list + " --seed " + s + " --out " +
        out.string());
    std::size_t rows = 0;
    const auto rmse = sweep_rmse(out / "sweep.csv", &rows);
    if (seed == 11) full_rows = rows;
    m1.push_back(rmse.at(1));
    m40.push_back(rmse.at(40));
  }
  const bool pass = full_rows == 5 && mean(m40) <= mean(m1);
  return {pass, "full sweep emitted " + std::to_string(full_rows) + " rows; mean test RMSE M=40 " + fmt(mean(m40)) +
                    " vs M=1 " + fmt(mean(m1)) + " (" + join(m40) + " vs " + join(m1) +
                    "; 5 early_peaked corpora of 100 sessions)"};
}

// ---------------------------------------------------------------------------
// 10: determinism of every command rerun from its resolved config

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = read_text_file(entry.path());
  }
  return files;
}

Verdict criterion_10() {
  const fs::path root = fresh(kScratch / "c10");
  fs::create_directories(root);
  const std::string tiny =
      " --m 10 --token-dim 8 --embedding-dim 8 --hidden-size 8 --attention-size 8 --max-tokens 128"
      " --predictor-epochs 5 --seed 3";
  const std::string refine_tiny = tiny + " --encoder-epochs 3 --sqe-epochs 5";
  const fs::path corpus = root / "corpus";
  const std::string c = " --corpus " + (corpus / "corpus.jsonl").string();
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"corpus", "gen-corpus --n-sessions 30 --segments-min 2 --segments-max 4 --utterances-per-segment 10 --seed 5"},
      {"baseline", "train-baseline" + c + " --seed 3"},
      {"refine", "refine" + c + " --planted " + (corpus / "planted.jsonl").string() + " --k 1" + refine_tiny},
      {"predictor", "train-predictor" + c + tiny + " --encoder " + (root / "refine" / "iter_1" / "encoder.ckpt.json").string()},
      {"evaluate", "evaluate --run " + (root / "refine").string()},
      {"sweep", "sweep-m" + c + refine_tiny + " --m-list 5,10 --k 1"},
      {"analysis", "analyze --run " + (root / "refine").string() + " --n-segments 3"},
  };
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& [name, args] : steps) {
    const fs::path out = root / name;
    cli(args + " --out " + out.string());
    const auto first = snapshot(out);
    const fs::path conf = root / (name + ".conf");
    fs::copy_file(out / "config.resolved", conf, fs::copy_options::overwrite_existing);
    fs::remove_all(out);
    cli(args.substr(0, args.find(' ')) + " --config " + conf.string());
    const auto second = snapshot(out);
    files += first.size();
    if (first != second) differing.push_back(name);
  }
  std::string detail = std::to_string(steps.size()) + " commands rerun from config.resolved, " + std::to_string(files) +
                       " files compared byte for byte";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: no bound
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::error);
  fs::create_directories(kScratch);
  const std::vector<Criterion> criteria = {
      {1, "shift-corrected estimates average to the session score", 60, criterion_1},
      {2, "session estimate decomposes into segment estimates", 60, criterion_2},
      {3, "gradients match finite differences", 120, criterion_3},
      {4, "padded segments change nothing", 30, criterion_4},
      {5, "refinement recovers planted local quality", 600, criterion_5},
      {6, "uneven attention follows the quality profile", 600, criterion_6},
      {7, "baseline and metric worked examples", 0, criterion_7},
      {8, "keyword frequencies and backward selection", 0, criterion_8},
      {9, "segment-length sweep", 900, criterion_9},
      {10, "reruns from resolved configs are byte-identical", 0, criterion_10},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && elapsed > c.time_limit_s) {
      v.pass = false;
      v.detail += "; exceeded the " + fmt(c.time_limit_s, 0) + " s budget";
    }
    std::printf("criterion %2d %s: %s (%s) [%.1f s]\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), elapsed);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
