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

#include "hierseg/hierseg.h"

#include <memory>
#include <new>
#include <string>

#include "hierseg/commands.hpp"
#include "hierseg/config.hpp"
#include "hierseg/corpus.hpp"
#include "hierseg/error.hpp"
#include "hierseg/log.hpp"
#include "hierseg/sqe.hpp"

struct hs_config {
  explicit hs_config(const std::string& command) : config(command) {}
  hierseg::RunConfig config;
  mutable std::string scratch;
};

struct hs_corpus {
  std::vector<hierseg::Session> sessions;
};

namespace {

thread_local std::string g_last_error;

hs_status status_of(hierseg::ErrorKind kind) {
  using hierseg::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return HS_ERR_INVALID_ARGUMENT;
    case ErrorKind::parse: return HS_ERR_PARSE;
    case ErrorKind::validation: return HS_ERR_VALIDATION;
    case ErrorKind::shape: return HS_ERR_SHAPE;
    case ErrorKind::numeric: return HS_ERR_NUMERIC;
    case ErrorKind::io: return HS_ERR_IO;
    case ErrorKind::contract: return HS_ERR_CONTRACT;
  }
  return HS_ERR_INTERNAL;
}

template <class F>
hs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return HS_OK;
  } catch (const hierseg::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return HS_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) hierseg::fail(hierseg::ErrorKind::invalid_argument, std::string(what) + " is NULL");
}

const hierseg::CommandSpec* spec_at(size_t index) {
  const auto& specs = hierseg::command_specs();
  return index < specs.size() ? &specs[index] : nullptr;
}

}  // namespace

extern "C" {

const char* hs_last_error(void) { return g_last_error.c_str(); }

const char* hs_status_name(hs_status status) {
  switch (status) {
    case HS_OK: return "ok";
    case HS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HS_ERR_PARSE: return "parse error";
    case HS_ERR_VALIDATION: return "validation error";
    case HS_ERR_SHAPE: return "shape error";
    case HS_ERR_NUMERIC: return "numeric error";
    case HS_ERR_IO: return "i/o error";
    case HS_ERR_CONTRACT: return "contract violation";
    case HS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hs_version(void) { return "0.1.0"; }

hs_status hs_set_log_level(int level) {
  return guarded([&] {
    if (level < 0 || level > 4) hierseg::fail(hierseg::ErrorKind::invalid_argument, "log level must be in [0, 4]");
    hierseg::log::set_level(static_cast<hierseg::log::Level>(level));
  });
}

size_t hs_command_count(void) { return hierseg::command_specs().size(); }

const char* hs_command_name(size_t index) {
  const auto* s = spec_at(index);
  return s ? s->name.c_str() : nullptr;
}

const char* hs_command_help(size_t index) {
  const auto* s = spec_at(index);
  return s ? s->help.c_str() : nullptr;
}

hs_status hs_command_key_count(const char* command, size_t* count) {
  return guarded([&] {
    require(command, "command");
    require(count, "count");
    *count = hierseg::command_spec(command).keys.size();
  });
}

hs_status hs_command_key(const char* command, size_t index, const char** name, const char** default_value,
                         const char** help, int* required) {
  return guarded([&] {
    require(command, "command");
    const auto& spec = hierseg::command_spec(command);
    if (index >= spec.keys.size()) hierseg::fail(hierseg::ErrorKind::invalid_argument, "key index out of range");
    const auto& k = spec.keys[index];
    if (name) *name = k.name.c_str();
    if (default_value) *default_value = k.default_value.c_str();
    if (help) *help = k.help.c_str();
    if (required) *required = k.required ? 1 : 0;
  });
}

hs_status hs_config_create(const char* command, hs_config** out) {
  return guarded([&] {
    require(command, "command");
    require(out, "out");
    *out = nullptr;
    *out = new hs_config(command);
  });
}

void hs_config_destroy(hs_config* config) { delete config; }

hs_status hs_config_load_file(hs_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->config.load_file(path);
  });
}

hs_status hs_config_set(hs_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

hs_status hs_config_get(const hs_config* config, const char* key, const char** value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->scratch = config->config.get(key);
    *value = config->scratch.c_str();
  });
}

hs_status hs_config_resolved(hs_config* config, const char** text) {
  return guarded([&] {
    require(config, "config");
    require(text, "text");
    config->scratch = config->config.resolved_text();
    *text = config->scratch.c_str();
  });
}

hs_status hs_run(const hs_config* config) {
  return guarded([&] {
    require(config, "config");
    hierseg::run_command(config->config);
  });
}

hs_status hs_corpus_load(const char* path, hs_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto corpus = std::make_unique<hs_corpus>();
    corpus->sessions = hierseg::load_sessions(path);
    *out = corpus.release();
  });
}

void hs_corpus_destroy(hs_corpus* corpus) { delete corpus; }

size_t hs_corpus_size(const hs_corpus* corpus) { return corpus ? corpus->sessions.size() : 0; }

const char* hs_corpus_session_id(const hs_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->sessions.size()) return nullptr;
  return corpus->sessions[index].id.c_str();
}

size_t hs_corpus_utterance_count(const hs_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->sessions.size()) return 0;
  return corpus->sessions[index].utterances.size();
}

hs_status hs_corpus_segment_counts(const hs_corpus* corpus, size_t index, size_t m, size_t* counts,
                                   size_t* n_segments) {
  return guarded([&] {
    require(corpus, "corpus");
    require(n_segments, "n_segments");
    if (index >= corpus->sessions.size()) hierseg::fail(hierseg::ErrorKind::invalid_argument, "session index out of range");
    const auto segments = hierseg::segment_session(corpus->sessions[index], hierseg::SegmentationConfig{m, {}});
    *n_segments = segments.size();
    if (counts) {
      for (size_t i = 0; i < segments.size(); ++i) counts[i] = segments[i].utterance_count();
    }
  });
}

hs_status hs_rescale(const char* code, double score, double* normalized) {
  return guarded([&] {
    require(code, "code");
    require(normalized, "normalized");
    if (!hierseg::is_known_code(code)) hierseg::fail(hierseg::ErrorKind::invalid_argument, std::string("unknown code '") + code + "'");
    *normalized = hierseg::rescale(score, hierseg::ScoreScale::for_code(code));
  });
}

hs_status hs_segment_weights_even(const size_t* utterance_counts, size_t n, double* alpha) {
  return guarded([&] {
    require(utterance_counts, "utterance_counts");
    require(alpha, "alpha");
    const auto w = hierseg::segment_weights_even({utterance_counts, n});
    std::copy(w.begin(), w.end(), alpha);
  });
}

hs_status hs_shift_correct(const double* s_hat_i, const double* alpha, size_t n, double s_true, double s_hat,
                           double* s_bar_i) {
  return guarded([&] {
    require(s_hat_i, "s_hat_i");
    require(alpha, "alpha");
    require(s_bar_i, "s_bar_i");
    const auto out = hierseg::shift_correct({s_hat_i, n}, {alpha, n}, s_true, s_hat);
    std::copy(out.begin(), out.end(), s_bar_i);
  });
}

}  // extern "C"
