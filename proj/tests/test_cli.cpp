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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = HIERSEG_CLI_SCRATCH;

struct Outcome {
  int exit_code = -1;
  std::string output;
};

Outcome run(const std::string& args) {
  const fs::path log = kScratch / "last_output.txt";
  const std::string command = std::string("\"") + HIERSEG_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  Outcome o;
  o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  o.output = ss.str();
  return o;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  const fs::path dir = kScratch / name;
  fs::remove_all(dir);
  return dir;
}

// Small enough to train in about a second.
const std::string kModel =
    " --m 10 --token-dim 4 --embedding-dim 4 --hidden-size 4 --attention-size 4 --max-tokens 64"
    " --predictor-epochs 3 --seed 5";
const std::string kTiny = kModel + " --encoder-epochs 2 --sqe-epochs 2";

fs::path tiny_corpus() {
  static const fs::path dir = [] {
    const fs::path d = fresh("corpus");
    const auto r = run("gen-corpus --out " + d.string() +
                       " --n-sessions 16 --segments-min 2 --segments-max 3 --utterances-per-segment 10 --seed 3");
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir / "corpus.jsonl";
}

}  // namespace

TEST_CASE("help exits cleanly and lists every command") {
  const auto r = run("--help");
  CHECK(r.exit_code == 0);
  for (const char* name : {"gen-corpus", "train-baseline", "refine", "train-predictor", "evaluate", "sweep-m", "analyze"}) {
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("unknown flags and commands exit nonzero") {
  auto r = run("refine --no-such-flag 1");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("no-such-flag") != std::string::npos);
  r = run("frobnicate");
  CHECK(r.exit_code != 0);
  r = run("");
  CHECK(r.exit_code != 0);
}

TEST_CASE("missing inputs exit nonzero with a message") {
  auto r = run("refine --out " + fresh("missing").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("--corpus is required") != std::string::npos);
  r = run("refine --corpus " + (kScratch / "absent.jsonl").string() + " --out " + fresh("missing").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("absent.jsonl") != std::string::npos);
  r = run("refine --config " + (kScratch / "absent.conf").string());
  CHECK(r.exit_code != 0);
}

TEST_CASE("invalid option combinations are rejected") {
  const std::string base = "refine --corpus " + tiny_corpus().string() + " --out " + fresh("combo").string();
  auto r = run(base + " --mode uneven --alpha-override utterance_counts");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("invalid combination") != std::string::npos);
  r = run(base + " --embeddings " + tiny_corpus().string() + " --k 1");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("invalid combination") != std::string::npos);
  r = run(base + " --code zz");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("unknown code") != std::string::npos);
}

TEST_CASE("a run is reproducible from its resolved configuration") {
  const fs::path out = fresh("rerun");
  const auto first = run("refine --corpus " + tiny_corpus().string() + " --out " + out.string() + kTiny + " --k 1");
  REQUIRE(first.exit_code == 0);
  const std::string predictor = slurp(out / "predictor.ckpt.json");
  const std::string labels = slurp(out / "iter_1" / "labels.jsonl");
  const std::string estimates = slurp(out / "iter_0" / "estimates.jsonl");
  const fs::path resolved = kScratch / "rerun.conf";
  fs::copy_file(out / "config.resolved", resolved, fs::copy_options::overwrite_existing);
  fs::remove_all(out);

  const auto second = run("refine --config " + resolved.string());
  REQUIRE(second.exit_code == 0);
  CHECK(slurp(out / "predictor.ckpt.json") == predictor);
  CHECK(slurp(out / "iter_1" / "labels.jsonl") == labels);
  CHECK(slurp(out / "iter_0" / "estimates.jsonl") == estimates);
  CHECK(slurp(out / "config.resolved") == slurp(resolved));
}

TEST_CASE("refine with no label updates matches the plain hierarchical pipeline") {
  const fs::path refined = fresh("k0_refine");
  const fs::path plain = fresh("k0_plain");
  REQUIRE(run("refine --corpus " + tiny_corpus().string() + " --out " + refined.string() + kTiny + " --k 0").exit_code == 0);
  REQUIRE(run("train-predictor --corpus " + tiny_corpus().string() + " --out " + plain.string() + kModel + " --encoder " +
              (refined / "iter_0" / "encoder.ckpt.json").string())
              .exit_code == 0);
  CHECK(slurp(refined / "predictor.ckpt.json") == slurp(plain / "predictor.ckpt.json"));

  REQUIRE(run("evaluate --run " + refined.string() + " --out " + (refined / "eval").string()).exit_code == 0);
  REQUIRE(run("evaluate --run " + plain.string() + " --out " + (plain / "eval").string()).exit_code == 0);
  CHECK(slurp(refined / "eval" / "metrics.json") == slurp(plain / "eval" / "metrics.json"));
  CHECK(fs::exists(refined / "diagnostics.json"));
  CHECK(fs::exists(refined / "config.resolved"));
}

TEST_CASE("config file values apply below flags") {
  const fs::path out = fresh("precedence");
  const fs::path conf = kScratch / "precedence.conf";
  std::ofstream(conf) << "[common]\nseed = 1\nn_sessions = 9\n[gen-corpus]\nn_sessions = 4\n";
  REQUIRE(run("gen-corpus --config " + conf.string() + " --out " + out.string() + " --seed 2").exit_code == 0);
  const std::string resolved = slurp(out / "config.resolved");
  CHECK(resolved.find("n_sessions = 4\n") != std::string::npos);
  CHECK(resolved.find("seed = 2\n") != std::string::npos);
  std::size_t lines = 0;
  for (char c : slurp(out / "corpus.jsonl")) lines += c == '\n';
  CHECK(lines == 4);
}
