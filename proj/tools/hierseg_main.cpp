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

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hierseg/hierseg.h"

namespace {

std::string flag_for(const std::string& key) {
  std::string flag = "--" + key;
  for (char& ch : flag) {
    if (ch == '_') ch = '-';
  }
  return flag;
}

int report(hs_status status) {
  std::fprintf(stderr, "hierseg: %s: %s\n", hs_status_name(status), hs_last_error());
  return static_cast<int>(status) + 1;
}

struct CommandFlags {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical segment-level quality estimation for long conversations"};
  app.require_subcommand(1);
  int log_level = 2;
  app.add_option("--log-level", log_level, "0 debug, 1 info, 2 warn, 3 error, 4 off")->check(CLI::Range(0, 4));
  app.set_version_flag("--version", hs_version());

  std::vector<CommandFlags> commands(hs_command_count());
  for (size_t c = 0; c < commands.size(); ++c) {
    const char* name = hs_command_name(c);
    CommandFlags& cmd = commands[c];
    cmd.app = app.add_subcommand(name, hs_command_help(c));
    cmd.app->add_option("--config", cmd.config_file, "key = value file with [common] and [" + std::string(name) + "] sections")
        ->check(CLI::ExistingFile);
    size_t n_keys = 0;
    if (hs_command_key_count(name, &n_keys) != HS_OK) return report(HS_ERR_INTERNAL);
    for (size_t k = 0; k < n_keys; ++k) {
      const char* key = nullptr;
      const char* def = nullptr;
      const char* help = nullptr;
      int required = 0;
      hs_command_key(name, k, &key, &def, &help, &required);
      std::string description = help;
      if (*def) description += " (default: " + std::string(def) + ")";
      if (required) description += " (required)";
      cmd.options[key] = cmd.app->add_option(flag_for(key), cmd.values[key], description);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (hs_set_log_level(log_level) != HS_OK) return report(HS_ERR_INVALID_ARGUMENT);
  for (size_t c = 0; c < commands.size(); ++c) {
    CommandFlags& cmd = commands[c];
    if (!cmd.app->parsed()) continue;
    hs_config* config = nullptr;
    hs_status status = hs_config_create(hs_command_name(c), &config);
    if (status == HS_OK && !cmd.config_file.empty()) status = hs_config_load_file(config, cmd.config_file.c_str());
    for (const auto& [key, option] : cmd.options) {
      if (status != HS_OK) break;
      if (option->count() > 0) status = hs_config_set(config, key.c_str(), cmd.values[key].c_str());
    }
    if (status == HS_OK) status = hs_run(config);
    hs_config_destroy(config);
    return status == HS_OK ? 0 : report(status);
  }
  return 0;
}
