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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/config.hpp"
#include "hierseg/corpus.hpp"
#include "hierseg/metrics.hpp"
#include "hierseg/predictor.hpp"

namespace hierseg {

/// Runs one command; every command writes config.resolved into its output
/// directory alongside its results.
void run_command(const RunConfig& config);

struct RunEvaluation {
  nlohmann::json manifest;
  MetricsRecord metrics;
  std::vector<SessionPrediction> predictions;
};

/// Scores the held-out sessions of a run directory written by refine or
/// train-predictor. An empty `corpus` uses the corpus recorded in the run.
RunEvaluation evaluate_run(const std::filesystem::path& run_dir, const std::filesystem::path& corpus = {});

}  // namespace hierseg
