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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierseg/nn/tensor.hpp"

namespace hierseg::nn {

/// On-disk model: {"format_version": 1, "model_kind": ..., "params": [...],
/// "train_meta": {...}}. Model-specific extras (vocabulary, mode, task) live
/// in additional top-level keys.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::string model_kind;
  std::vector<Parameter> params;
  nlohmann::json train_meta = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// Copies stored values into `targets`, matching by name and shape.
  void load_into(std::span<Parameter* const> targets) const;
};

Checkpoint make_checkpoint(std::string model_kind, std::span<const Parameter* const> params);

}  // namespace hierseg::nn
