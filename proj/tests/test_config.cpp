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

#include <cstdlib>
#include <set>

#include "doctest.h"
#include "hierseg/config.hpp"
#include "hierseg/error.hpp"
#include "hierseg/io.hpp"
#include "support.hpp"

using namespace hierseg;

TEST_CASE("every command is registered with unique keys") {
  std::vector<std::string> names;
  for (const auto& c : command_specs()) {
    names.push_back(c.name);
    std::set<std::string> keys;
    for (const auto& k : c.keys) CHECK(keys.insert(k.name).second);
  }
  CHECK(names == std::vector<std::string>{"gen-corpus", "train-baseline", "refine", "train-predictor", "evaluate",
                                          "sweep-m", "analyze"});
  CHECK(test::error_kind_of([] { command_spec("train"); }) == ErrorKind::invalid_argument);
}

TEST_CASE("later configuration sources win") {
  RunConfig c("refine");
  CHECK(c.get("m") == "40");
  CHECK(c.get("k") == "1");
  CHECK(c.get("seed") == "0");
  c.load_text("seed = 3\nm = 5\n[common]\nk = 2\n[refine]\nm = 20\n[sweep-m]\nm = 80\nbogus = 1\n");
  CHECK(c.get("seed") == "3");
  CHECK(c.get("k") == "2");
  CHECK(c.get_size("m") == 20);
  c.set("m", "1");
  CHECK(c.get_size("m") == 1);
  CHECK(c.get_size("k") == 2);
}

TEST_CASE("section order within a file does not change precedence") {
  RunConfig c("refine");
  c.load_text("[refine]\nm = 20\n[common]\nm = 5\n");
  CHECK(c.get("m") == "20");
}

TEST_CASE("common keys unknown to a command are ignored") {
  RunConfig c("evaluate");
  c.load_text("[common]\nm = 5\nrun = r\n");
  CHECK_FALSE(c.knows("m"));
  CHECK(c.get("run") == "r");
}

TEST_CASE("configuration errors") {
  RunConfig c("refine");
  CHECK(test::error_kind_of([&] { c.load_text("[refine]\nbogus = 1\n", "f.conf"); }) == ErrorKind::invalid_argument);
  try {
    c.load_text("[refine]\n\nbogus = 1\n", "f.conf");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("f.conf:3") != std::string::npos);
  }
  CHECK(test::error_kind_of([&] { c.load_text("[refine\n"); }) == ErrorKind::parse);
  CHECK(test::error_kind_of([&] { c.load_text("[]\n"); }) == ErrorKind::parse);
  CHECK(test::error_kind_of([&] { c.load_text("m 40\n"); }) == ErrorKind::parse);
  CHECK(test::error_kind_of([&] { c.load_text("= 40\n"); }) == ErrorKind::parse);
  CHECK(test::error_kind_of([&] { c.set("bogus", "1"); }) == ErrorKind::invalid_argument);
  try {
    c.set("bogus_flag", "1");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("--bogus-flag") != std::string::npos);
  }
  c.set("m", "forty");
  CHECK(test::error_kind_of([&] { c.get_size("m"); }) == ErrorKind::invalid_argument);
  c.set("m", "-1");
  CHECK(test::error_kind_of([&] { c.get_size("m"); }) == ErrorKind::invalid_argument);
  c.set("encoder_lr", "fast");
  CHECK(test::error_kind_of([&] { c.get_double("encoder_lr"); }) == ErrorKind::invalid_argument);
  CHECK(test::error_kind_of([&] { c.get("bogus"); }) == ErrorKind::contract);
}

TEST_CASE("comments, blanks and dashed keys are accepted") {
  RunConfig c("refine");
  c.load_text("# comment\n; other\n\n  [refine]  \n  encoder-lr = 0.01  \n");
  CHECK(c.get_double("encoder_lr") == 0.01);
}

TEST_CASE("lists parse into items") {
  RunConfig c("sweep-m");
  CHECK(c.get_size_list("m_list") == std::vector<std::size_t>{1, 5, 20, 40, 80});
  c.set("m_list", "3, 7");
  CHECK(c.get_size_list("m_list") == std::vector<std::size_t>{3, 7});
  c.set("m_list", "3,x");
  CHECK(test::error_kind_of([&] { c.get_size_list("m_list"); }) == ErrorKind::invalid_argument);
  RunConfig g("gen-corpus");
  CHECK(g.get_list("keywords") == std::vector<std::string>{"agenda", "evidence", "feeling", "helpful", "homework"});
}

TEST_CASE("required keys are enforced") {
  RunConfig c("refine");
  CHECK(test::error_kind_of([&] { c.check_required(); }) == ErrorKind::invalid_argument);
  c.set("corpus", "c.jsonl");
  c.set("out", "o");
  c.check_required();
  CHECK(c.is_set("corpus"));
  CHECK_FALSE(c.is_set("planted"));
}

TEST_CASE("resolved text reproduces the configuration") {
  RunConfig c("refine");
  c.load_text("[common]\nseed = 9\n[refine]\nmode = uneven\n");
  c.set("corpus", "c.jsonl");
  c.set("k", "3");
  const std::string text = c.resolved_text();
  CHECK(text.rfind("[refine]\n", 0) == 0);
  CHECK(text.find("mode = uneven\n") != std::string::npos);
  const auto dir = test::scratch_dir("config");
  c.write_resolved(dir);
  RunConfig again("refine");
  again.load_file(dir / "config.resolved");
  CHECK(again.resolved_text() == text);
  for (const auto& k : command_spec("refine").keys) CHECK(again.get(k.name) == c.get(k.name));
}

TEST_CASE("thread limit follows the environment") {
  ::setenv("HIERSEG_THREADS", "3", 1);
  CHECK(thread_limit() == 3);
  ::setenv("HIERSEG_THREADS", "0", 1);
  CHECK(test::error_kind_of([] { thread_limit(); }) == ErrorKind::invalid_argument);
  ::setenv("HIERSEG_THREADS", "2x", 1);
  CHECK(test::error_kind_of([] { thread_limit(); }) == ErrorKind::invalid_argument);
  ::unsetenv("HIERSEG_THREADS");
  CHECK(thread_limit() >= 1);
}
