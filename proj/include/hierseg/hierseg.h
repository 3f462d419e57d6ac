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

#ifndef HIERSEG_HIERSEG_H
#define HIERSEG_HIERSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_INVALID_ARGUMENT = 1,
  HS_ERR_PARSE = 2,
  HS_ERR_VALIDATION = 3,
  HS_ERR_SHAPE = 4,
  HS_ERR_NUMERIC = 5,
  HS_ERR_IO = 6,
  HS_ERR_CONTRACT = 7,
  HS_ERR_INTERNAL = 8
} hs_status;

/* Message of the last failure on the calling thread; empty after success. */
HS_API const char* hs_last_error(void);
HS_API const char* hs_status_name(hs_status status);
HS_API const char* hs_version(void);

/* 0 debug, 1 info, 2 warn (default), 3 error, 4 off. */
HS_API hs_status hs_set_log_level(int level);

/* ---- command table ---------------------------------------------------- */

HS_API size_t hs_command_count(void);
HS_API const char* hs_command_name(size_t index);
HS_API const char* hs_command_help(size_t index);
HS_API hs_status hs_command_key_count(const char* command, size_t* count);
/* Any of the out pointers may be NULL. Strings live as long as the library. */
HS_API hs_status hs_command_key(const char* command, size_t index, const char** name, const char** default_value,
                                const char** help, int* required);

/* ---- run configuration ------------------------------------------------ */

typedef struct hs_config hs_config;

HS_API hs_status hs_config_create(const char* command, hs_config** out);
HS_API void hs_config_destroy(hs_config* config);
/* Loads the [common] and [<command>] sections of a key = value file. */
HS_API hs_status hs_config_load_file(hs_config* config, const char* path);
HS_API hs_status hs_config_set(hs_config* config, const char* key, const char* value);
/* Pointer valid until the next call on this config. */
HS_API hs_status hs_config_get(const hs_config* config, const char* key, const char** value);
/* Resolved configuration text; pointer valid until the next call on this config. */
HS_API hs_status hs_config_resolved(hs_config* config, const char** text);

/* Runs the configured command. */
HS_API hs_status hs_run(const hs_config* config);

/* ---- corpora ---------------------------------------------------------- */

typedef struct hs_corpus hs_corpus;

HS_API hs_status hs_corpus_load(const char* path, hs_corpus** out);
HS_API void hs_corpus_destroy(hs_corpus* corpus);
HS_API size_t hs_corpus_size(const hs_corpus* corpus);
HS_API const char* hs_corpus_session_id(const hs_corpus* corpus, size_t index);
HS_API size_t hs_corpus_utterance_count(const hs_corpus* corpus, size_t index);
/* Utterance counts of the segments of a session at segment length m. Pass
 * counts = NULL to query the number of segments. */
HS_API hs_status hs_corpus_segment_counts(const hs_corpus* corpus, size_t index, size_t m, size_t* counts,
                                          size_t* n_segments);

/* ---- numeric helpers -------------------------------------------------- */

/* (s - A/2) / (A/2) for code "total" or one of the eleven item codes. */
HS_API hs_status hs_rescale(const char* code, double score, double* normalized);
HS_API hs_status hs_segment_weights_even(const size_t* utterance_counts, size_t n, double* alpha);
HS_API hs_status hs_shift_correct(const double* s_hat_i, const double* alpha, size_t n, double s_true, double s_hat,
                                  double* s_bar_i);

#ifdef __cplusplus
}
#endif

#endif /* HIERSEG_HIERSEG_H */
