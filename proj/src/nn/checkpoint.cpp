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

#include "hierseg/nn/checkpoint.hpp"

#include <fstream>
#include <map>

#include "hierseg/error.hpp"
#include "hierseg/io.hpp"

namespace hierseg::nn {

nlohmann::json Checkpoint::to_json() const {
  nlohmann::json j = extra;
  j["format_version"] = kFormatVersion;
  j["model_kind"] = model_kind;
  nlohmann::json list = nlohmann::json::array();
  for (const Parameter& p : params) {
    list.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"data", p.value.storage()}});
  }
  j["params"] = std::move(list);
  j["train_meta"] = train_meta;
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    fail(ErrorKind::parse, "checkpoint is missing format_version");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kFormatVersion) {
    fail(ErrorKind::validation, "unsupported checkpoint format_version " + std::to_string(version));
  }
  Checkpoint c;
  try {
    c.model_kind = j.at("model_kind").get<std::string>();
    for (const auto& entry : j.at("params")) {
      Parameter p(entry.at("name").get<std::string>(), entry.at("shape").get<Shape>());
      const auto data = entry.at("data").get<std::vector<double>>();
      p.value = Tensor(p.value.shape(), data);
      c.params.push_back(std::move(p));
    }
    c.train_meta = j.value("train_meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed checkpoint: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "format_version" && key != "model_kind" && key != "params" && key != "train_meta") {
      c.extra[key] = value;
    }
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  write_text_file(path, to_json().dump() + "\n");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void Checkpoint::load_into(std::span<Parameter* const> targets) const {
  std::map<std::string, const Parameter*> by_name;
  for (const Parameter& p : params) by_name[p.name] = &p;
  for (Parameter* t : targets) {
    const auto it = by_name.find(t->name);
    if (it == by_name.end()) {
      fail(ErrorKind::validation, model_kind + " checkpoint lacks parameter '" + t->name + "'");
    }
    if (it->second->value.shape() != t->value.shape()) {
      fail(ErrorKind::shape, "parameter '" + t->name + "' has shape " +
                                 shape_string(it->second->value.shape()) + " in checkpoint, expected " +
                                 shape_string(t->value.shape()));
    }
    t->value = it->second->value;
    t->grad = Tensor(t->value.shape());
  }
}

Checkpoint make_checkpoint(std::string model_kind, std::span<const Parameter* const> params) {
  Checkpoint c;
  c.model_kind = std::move(model_kind);
  for (const Parameter* p : params) {
    Parameter copy(p->name, p->value.shape());
    copy.value = p->value;
    c.params.push_back(std::move(copy));
  }
  return c;
}

}  // namespace hierseg::nn
