// Copyright 2026 The REDP Authors.
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

#include "redp/ad/checkpoint.hpp"

#include "redp/error.hpp"
#include "redp/util.hpp"

namespace redp::ad {

using nlohmann::json;

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  // ordered_json keeps parameters in store order so the file is stable.
  nlohmann::ordered_json doc;
  doc["format"] = "redp-checkpoint";
  doc["format_version"] = kCheckpointVersion;
  doc["kind"] = ckpt.kind;
  doc["config"] = ckpt.config;
  doc["domain"] = ckpt.domain;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& p : ckpt.params) {
    nlohmann::ordered_json entry;
    entry["shape"] = p.value.shape;
    entry["trainable"] = p.trainable;
    entry["encoding"] = "base64-f64le";
    entry["data"] = util::encode_doubles(p.value.data);
    params[p.name] = std::move(entry);
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  try {
    if (doc.at("format") != "redp-checkpoint") {
      throw Error(ErrorKind::kSchemaViolation, "not a checkpoint document");
    }
    if (doc.at("format_version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorKind::kSchemaViolation, "unsupported checkpoint version");
    }
    Checkpoint ckpt;
    ckpt.kind = doc.at("kind").get<std::string>();
    ckpt.config = json::parse(doc.at("config").dump());
    ckpt.domain = json::parse(doc.at("domain").dump());
    for (const auto& [name, entry] : doc.at("parameters").items()) {
      if (entry.at("encoding") != "base64-f64le") {
        throw Error(ErrorKind::kSchemaViolation, "unknown encoding for " + name);
      }
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> values = util::decode_doubles(entry.at("data").get<std::string>());
      ckpt.params.add(name, Tensor(std::move(shape), std::move(values)),
                      entry.at("trainable").get<bool>());
    }
    return ckpt;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  util::write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(util::read_file(path));
}

}  // namespace redp::ad
