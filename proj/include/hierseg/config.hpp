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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hierseg {

struct KeySpec {
  std::string name;
  std::string default_value;  // empty means "not set"
  std::string help;
  bool required = false;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

const std::vector<CommandSpec>& command_specs();
/// Throws for an unknown command.
const CommandSpec& command_spec(const std::string& name);

/// Resolved key-value settings of one command. Sources apply in order
/// defaults < [common] < [command] section of a config file < explicit sets,
/// where later sources win.
class RunConfig {
 public:
  explicit RunConfig(const std::string& command);

  const std::string& command() const { return spec_->name; }

  /// Reads a flat `key = value` file with `[common]` and per-command
  /// sections. Keys before any section belong to [common]. Unknown keys in
  /// this command's section are an error; other sections are ignored.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& source = "<config>");

  void set(const std::string& key, const std::string& value);
  bool knows(const std::string& key) const;
  bool is_set(const std::string& key) const;
  const std::string& get(const std::string& key) const;

  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;

  /// Errors when a required key is unset.
  void check_required() const;

  /// `[command]` followed by every key in table order.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& dir) const;

 private:
  const CommandSpec* spec_;
  std::map<std::string, std::string> values_;
};

/// Thread cap from HIERSEG_THREADS (unset: hardware concurrency, at least 1).
std::size_t thread_limit();

}  // namespace hierseg
