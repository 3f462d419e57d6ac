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

#include "hierseg/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <thread>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"

namespace hierseg {

namespace {

std::vector<KeySpec> merge(std::initializer_list<std::vector<KeySpec>> groups) {
  std::vector<KeySpec> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

const std::vector<KeySpec> kRunKeys = {
    {"corpus", "", "transcript JSONL", true},
    {"out", "", "output directory", true},
    {"code", "total", "score to model: ag, at, co, fb, gd, hw, ip, cb, pt, sc, un or total"},
    {"task", "regression", "regression or classification"},
    {"seed", "0", "seed for splits, initialization and shuffling"},
    {"test_fraction", "0.2", "share of sessions held out for evaluation"},
};

const std::vector<KeySpec> kModelKeys = {
    {"m", "40", "utterances per segment"},
    {"token_dim", "32", "encoder token embedding size"},
    {"embedding_dim", "32", "segment embedding size"},
    {"max_tokens", "512", "tokens per segment read by the encoder"},
    {"hidden_size", "32", "BiLSTM hidden size of predictor and SQE"},
    {"attention_size", "32", "attention projection size"},
    {"max_segments", "40", "predictor sequence length; longer sessions are truncated"},
    {"validation_fraction", "0.2", "share of training sessions used for early stopping"},
    {"predictor_lr", "0.001", "predictor learning rate"},
    {"predictor_epochs", "100", "predictor epoch limit"},
    {"predictor_batch", "16", "predictor batch size"},
    {"predictor_patience", "10", "predictor early-stopping patience (0 disables)"},
};

const std::vector<KeySpec> kRefineKeys = {
    {"planted", "", "planted-truth JSONL for recovery diagnostics"},
    {"k", "1", "number of label-update passes"},
    {"mode", "even", "SQE weighting: even or uneven"},
    {"alpha_override", "none", "segment weights supplied to the SQE: none or utterance_counts"},
    {"embeddings", "", "precomputed segment embeddings JSONL (static mode, requires k = 0)"},
    {"label_clamp", "1.5", "bound on refined labels fed to fine-tuning"},
    {"encoder_lr", "0.002", "encoder learning rate"},
    {"encoder_epochs", "10", "encoder epoch limit per pass"},
    {"encoder_batch", "32", "encoder batch size"},
    {"encoder_patience", "3", "encoder early-stopping patience (0 disables)"},
    {"encoder_weight_decay", "0", "decoupled weight decay during encoder fine-tuning"},
    {"sqe_lr", "0.001", "SQE learning rate"},
    {"sqe_epochs", "50", "SQE epoch limit"},
    {"sqe_batch", "16", "SQE batch size"},
    {"sqe_patience", "5", "SQE early-stopping patience (0 disables)"},
};

std::vector<CommandSpec> build_specs() {
  std::vector<CommandSpec> specs;
  specs.push_back({"gen-corpus",
                   "generate a synthetic corpus with planted segment qualities",
                   {
                       {"out", "", "output directory", true},
                       {"seed", "7", "generator seed"},
                       {"n_sessions", "200", "number of sessions"},
                       {"segments_min", "6", "fewest planted segments per session"},
                       {"segments_max", "12", "most planted segments per session"},
                       {"utterances_per_segment", "40", "utterances per planted segment"},
                       {"words_min", "4", "fewest words per utterance"},
                       {"words_max", "12", "most words per utterance"},
                       {"vocab_size", "300", "background vocabulary size"},
                       {"keywords", "agenda,evidence,feeling,helpful,homework", "comma-separated keywords"},
                       {"profile", "flat", "flat, early_peaked or late_peaked"},
                       {"noise_std", "0.1", "label noise in normalized units"},
                       {"keyword_rate", "0.08", "keyword probability per token at quality 6"},
                       {"quality_min", "1", "lowest session quality level"},
                       {"quality_max", "5", "highest session quality level"},
                       {"within_std", "0.5", "segment quality spread within a session"},
                   }});
  specs.push_back({"train-baseline",
                   "fit a tf-idf baseline (ridge regression or hinge classifier)",
                   merge({kRunKeys,
                          {
                              {"ridge_lambda", "1", "ridge penalty"},
                              {"hinge_lambda", "0.001", "hinge classifier L2 penalty"},
                              {"hinge_iterations", "1000", "hinge classifier iterations"},
                              {"hinge_step", "0.5", "initial hinge step size"},
                          }})});
  specs.push_back({"refine", "iteratively refine segment labels and train the session predictor",
                   merge({kRunKeys, kModelKeys, kRefineKeys})});
  specs.push_back({"train-predictor", "train the session predictor on fixed segment embeddings",
                   merge({kRunKeys, kModelKeys,
                          {
                              {"embeddings", "", "segment embeddings JSONL"},
                              {"encoder", "", "encoder checkpoint used to embed the corpus"},
                          }})});
  specs.push_back({"evaluate",
                   "evaluate a trained run on its held-out sessions",
                   {
                       {"run", "", "run directory written by refine or train-predictor", true},
                       {"out", "", "output directory", true},
                       {"corpus", "", "transcript JSONL (defaults to the run's corpus)"},
                   }});
  specs.push_back({"sweep-m", "run refine and evaluate for several segment lengths",
                   merge({kRunKeys, kModelKeys, kRefineKeys,
                          {
                              {"m_list", "1,5,20,40,80", "comma-separated segment lengths"},
                              {"threads", "0", "parallel runs (0: HIERSEG_THREADS or all cores)"},
                          }})});
  specs.push_back({"analyze",
                   "attention traces, segment groups, keyword frequencies and metrics for trained runs",
                   {
                       {"run", "", "comma-separated run directories", true},
                       {"out", "", "output directory", true},
                       {"corpus", "", "transcript JSONL (defaults to the run's corpus)"},
                       {"n_segments", "10", "trace sessions with exactly this many segments"},
                       {"group_by", "s_bar", "s_bar or s_hat"},
                       {"words", "", "comma-separated words to compare (default: backward selection)"},
                       {"k_keep", "5", "words kept by backward selection"},
                       {"candidates", "20", "words entering backward selection"},
                       {"ridge_lambda", "1", "ridge penalty used by backward selection"},
                   }});
  return specs;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

}  // namespace

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = build_specs();
  return specs;
}

const CommandSpec& command_spec(const std::string& name) {
  for (const auto& s : command_specs()) {
    if (s.name == name) return s;
  }
  fail(ErrorKind::invalid_argument, "unknown command '" + name + "'");
}

RunConfig::RunConfig(const std::string& command) : spec_(&command_spec(command)) {
  for (const auto& k : spec_->keys) values_[k.name] = k.default_value;
}

void RunConfig::load_file(const std::filesystem::path& path) { load_text(read_text_file(path), path.string()); }

void RunConfig::load_text(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> common, own;
  std::string section = "common";
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string raw = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::parse, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorKind::parse, where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::parse, where + "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::parse, where + "missing key");
    if (section == "common") {
      common[key] = value;
    } else if (section == spec_->name) {
      if (!knows(key)) fail(ErrorKind::invalid_argument, where + "unknown key '" + key + "' for " + spec_->name);
      own[key] = value;
    }
  }
  for (const auto& [k, v] : common) {
    if (knows(k)) values_[k] = v;
  }
  for (const auto& [k, v] : own) values_[k] = v;
}

bool RunConfig::knows(const std::string& key) const { return values_.count(key) > 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!knows(key)) fail(ErrorKind::invalid_argument, "unknown option " + flag_name(key) + " for " + spec_->name);
  values_[key] = value;
}

bool RunConfig::is_set(const std::string& key) const { return !get(key).empty(); }

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::contract, "configuration key '" + key + "' is not defined for " + spec_->name);
  return it->second;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno != 0) {
    fail(ErrorKind::invalid_argument, flag_name(key) + " expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(n);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const { return get_size(key); }

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) {
    fail(ErrorKind::invalid_argument, flag_name(key) + " expects a number, got '" + v + "'");
  }
  return d;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string item = trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : get_list(key)) {
    char* end = nullptr;
    const unsigned long long n = std::strtoull(item.c_str(), &end, 10);
    if (item[0] == '-' || *end != '\0') {
      fail(ErrorKind::invalid_argument, flag_name(key) + " expects integers, got '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

std::filesystem::path RunConfig::get_path(const std::string& key) const { return std::filesystem::path(get(key)); }

void RunConfig::check_required() const {
  for (const auto& k : spec_->keys) {
    if (k.required && get(k.name).empty()) fail(ErrorKind::invalid_argument, spec_->name + ": " + flag_name(k.name) + " is required");
  }
}

std::string RunConfig::resolved_text() const {
  std::string out = "[" + spec_->name + "]\n";
  for (const auto& k : spec_->keys) out += k.name + " = " + get(k.name) + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
  write_text_file(dir / "config.resolved", resolved_text());
}

std::size_t thread_limit() {
  if (const char* env = std::getenv("HIERSEG_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) fail(ErrorKind::invalid_argument, std::string("HIERSEG_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(n);
  }
  return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

}  // namespace hierseg
