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

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hierseg/hierseg.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_status_names(void) {
  CHECK(strlen(hs_status_name(HS_OK)) > 0);
  CHECK(strcmp(hs_status_name(HS_ERR_PARSE), "parse error") == 0);
  CHECK(strlen(hs_version()) > 0);
  CHECK(hs_set_log_level(2) == HS_OK);
  CHECK(hs_set_log_level(9) == HS_ERR_INVALID_ARGUMENT);
  CHECK(strlen(hs_last_error()) > 0);
  CHECK(hs_set_log_level(4) == HS_OK);
  CHECK(strlen(hs_last_error()) == 0);
}

static void test_command_table(void) {
  size_t n = hs_command_count();
  size_t i, count = 0;
  int found_refine = 0;
  CHECK(n == 7);
  CHECK(hs_command_name(n) == NULL);
  for (i = 0; i < n; ++i) {
    if (strcmp(hs_command_name(i), "refine") == 0) found_refine = 1;
  }
  CHECK(found_refine);
  CHECK(hs_command_key_count("refine", &count) == HS_OK);
  CHECK(count > 10);
  {
    const char* name = NULL;
    int required = -1;
    CHECK(hs_command_key("refine", 0, &name, NULL, NULL, &required) == HS_OK);
    CHECK(strcmp(name, "corpus") == 0);
    CHECK(required == 1);
    CHECK(hs_command_key("refine", count, &name, NULL, NULL, NULL) == HS_ERR_INVALID_ARGUMENT);
  }
  CHECK(hs_command_key_count("nope", &count) == HS_ERR_INVALID_ARGUMENT);
  CHECK(hs_command_key_count(NULL, &count) == HS_ERR_INVALID_ARGUMENT);
}

static void test_config(void) {
  hs_config* config = NULL;
  const char* value = NULL;
  const char* text = NULL;
  CHECK(hs_config_create("bogus", &config) == HS_ERR_INVALID_ARGUMENT);
  CHECK(config == NULL);
  CHECK(hs_config_create("refine", &config) == HS_OK);
  CHECK(hs_config_get(config, "m", &value) == HS_OK);
  CHECK(strcmp(value, "40") == 0);
  CHECK(hs_config_set(config, "m", "5") == HS_OK);
  CHECK(hs_config_get(config, "m", &value) == HS_OK);
  CHECK(strcmp(value, "5") == 0);
  CHECK(hs_config_set(config, "bogus", "1") == HS_ERR_INVALID_ARGUMENT);
  CHECK(strstr(hs_last_error(), "--bogus") != NULL);
  CHECK(hs_config_resolved(config, &text) == HS_OK);
  CHECK(strncmp(text, "[refine]\n", 9) == 0);
  CHECK(strstr(text, "m = 5\n") != NULL);
  CHECK(hs_run(config) == HS_ERR_INVALID_ARGUMENT);
  CHECK(hs_config_load_file(config, "/nonexistent/hierseg.conf") == HS_ERR_IO);
  hs_config_destroy(config);
  hs_config_destroy(NULL);
  CHECK(hs_run(NULL) == HS_ERR_INVALID_ARGUMENT);
}

static void test_corpus(const char* dir) {
  char corpus_path[1024];
  hs_config* config = NULL;
  hs_corpus* corpus = NULL;
  size_t n_segments = 0, i, total = 0;
  size_t counts[64];
  CHECK(hs_config_create("gen-corpus", &config) == HS_OK);
  CHECK(hs_config_set(config, "out", dir) == HS_OK);
  CHECK(hs_config_set(config, "n_sessions", "3") == HS_OK);
  CHECK(hs_config_set(config, "segments_min", "2") == HS_OK);
  CHECK(hs_config_set(config, "segments_max", "3") == HS_OK);
  CHECK(hs_run(config) == HS_OK);
  hs_config_destroy(config);

  snprintf(corpus_path, sizeof corpus_path, "%s/corpus.jsonl", dir);
  CHECK(hs_corpus_load("/nonexistent/corpus.jsonl", &corpus) == HS_ERR_IO);
  CHECK(corpus == NULL);
  CHECK(hs_corpus_load(corpus_path, &corpus) == HS_OK);
  CHECK(hs_corpus_size(corpus) == 3);
  CHECK(hs_corpus_session_id(corpus, 0) != NULL);
  CHECK(hs_corpus_session_id(corpus, 3) == NULL);
  CHECK(hs_corpus_segment_counts(corpus, 0, 30, NULL, &n_segments) == HS_OK);
  CHECK(n_segments >= 3 && n_segments <= 4);
  CHECK(hs_corpus_segment_counts(corpus, 0, 30, counts, &n_segments) == HS_OK);
  for (i = 0; i < n_segments; ++i) total += counts[i];
  CHECK(total == hs_corpus_utterance_count(corpus, 0));
  CHECK(hs_corpus_segment_counts(corpus, 0, 0, NULL, &n_segments) == HS_ERR_VALIDATION);
  CHECK(hs_corpus_segment_counts(corpus, 9, 30, NULL, &n_segments) == HS_ERR_INVALID_ARGUMENT);
  hs_corpus_destroy(corpus);
}

static void test_numeric(void) {
  double v = 0.0;
  size_t counts[3] = {40, 40, 20};
  double alpha[3];
  double s_hat_i[3] = {0.1, -0.2, 0.4};
  double s_bar_i[3];
  double s_hat, weighted = 0.0;
  size_t i;
  CHECK(hs_rescale("total", 66.0, &v) == HS_OK);
  CHECK(v == 1.0);
  CHECK(hs_rescale("ag", 3.0, &v) == HS_OK);
  CHECK(v == 0.0);
  CHECK(hs_rescale("xx", 3.0, &v) == HS_ERR_INVALID_ARGUMENT);
  CHECK(hs_segment_weights_even(counts, 3, alpha) == HS_OK);
  CHECK(fabs(alpha[0] - 0.4) < 1e-12 && fabs(alpha[2] - 0.2) < 1e-12);
  s_hat = alpha[0] * s_hat_i[0] + alpha[1] * s_hat_i[1] + alpha[2] * s_hat_i[2];
  CHECK(hs_shift_correct(s_hat_i, alpha, 3, 0.5, s_hat, s_bar_i) == HS_OK);
  for (i = 0; i < 3; ++i) {
    CHECK(fabs((s_bar_i[i] - s_hat_i[i]) - (0.5 - s_hat)) < 1e-12);
    weighted += alpha[i] * s_bar_i[i];
  }
  CHECK(fabs(weighted - 0.5) < 1e-12);
  CHECK(hs_segment_weights_even(NULL, 3, alpha) == HS_ERR_INVALID_ARGUMENT);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
    return 2;
  }
  test_status_names();
  test_command_table();
  test_config();
  test_corpus(argv[1]);
  test_numeric();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
