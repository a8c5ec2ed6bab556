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


#ifndef REDP_BABI_HPP_
#define REDP_BABI_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "redp/corpus.hpp"

namespace redp::babi {

// Surface template: literal tokens and {name} placeholders, each matching
// exactly one whitespace-delimited token.
struct Template {
  std::string label;  // intent or action
  std::vector<std::string> tokens;
};

struct TemplateInventory {
  std::vector<std::string> slots;
  std::map<std::string, std::vector<std::string>> values;
  std::map<std::string, std::string> patterns;  // ECMAScript regex per placeholder
  std::vector<Template> user;
  std::vector<Template> system;
};

TemplateInventory parse_inventory(std::string_view text);
std::filesystem::path default_inventory_path();
TemplateInventory load_inventory(const std::filesystem::path& path = default_inventory_path());

struct Match {
  std::string label;
  std::map<std::string, std::string> captures;
};

// First matching template wins. Returns false when none matches.
bool match_user(const TemplateInventory& inv, std::string_view utterance, Match& out);
bool match_system(const TemplateInventory& inv, std::string_view utterance, Match& out);

struct BabiCorpus {
  corpus::DomainSpec domain;
  std::vector<corpus::Dialogue> dialogues;
};

// Converts restaurant-reservation dialogues in bAbI line format. A
// <SILENCE> user line extends the preceding action run; knowledge-base
// lines are validated and skipped. Throws UnmatchedUtterance (with the
// line number) or MalformedBabi.
BabiCorpus ingest(std::string_view text, const TemplateInventory& inv);

// Seeded generator of restaurant-reservation dialogues in bAbI line format:
// greeting, partial request, slot questions, optional updates, api call with
// a small knowledge base, suggestions with rejections, reservation and
// optional phone/address requests.
std::string synthesize(std::size_t n, std::uint64_t seed);

}  // namespace redp::babi

#endif  // REDP_BABI_HPP_
