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

#include "hierseg/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace hierseg::log {

namespace {

std::atomic<Level> g_level{Level::warn};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, const std::string& message) {
  if (lvl < g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[hierseg %s] %s\n", tag, message.c_str());
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void debug(const std::string& message) { emit(Level::debug, "debug", message); }
void info(const std::string& message) { emit(Level::info, "info", message); }
void warn(const std::string& message) {
  ++g_warnings;
  emit(Level::warn, "warn", message);
}
void error(const std::string& message) { emit(Level::error, "error", message); }

std::size_t warning_count() { return g_warnings.load(); }

}  // namespace hierseg::log
