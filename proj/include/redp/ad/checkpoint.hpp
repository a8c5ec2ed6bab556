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

#ifndef REDP_AD_CHECKPOINT_HPP_
#define REDP_AD_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "redp/ad/tensor.hpp"

namespace redp::ad {

inline constexpr int kCheckpointVersion = 1;

// JSON document:
//   {"format": "redp-checkpoint", "format_version": 1, "kind": ...,
//    "config": {...}, "domain": {...},
//    "parameters": {name: {"shape": [...], "trainable": bool,
//                          "encoding": "base64-f64le", "data": "..."}}}
// Parameter payloads are raw little-endian doubles, so values round trip
// bit-exactly.
struct Checkpoint {
  std::string kind;
  nlohmann::json config;
  nlohmann::json domain;
  ParameterStore params;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws MalformedDocument / SchemaViolation.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace redp::ad

#endif  // REDP_AD_CHECKPOINT_HPP_
