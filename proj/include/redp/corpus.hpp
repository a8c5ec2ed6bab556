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

#ifndef REDP_CORPUS_HPP_
#define REDP_CORPUS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace redp::corpus {

inline constexpr std::string_view kActionListen = "action_listen";

// Inventory of a task domain. Slots are filled from same-named entities.
struct DomainSpec {
  std::vector<std::string> intents;
  std::vector<std::string> entities;
  std::vector<std::string> slots;
  std::vector<std::string> actions;

  bool has_intent(std::string_view name) const;
  bool has_entity(std::string_view name) const;
  bool has_action(std::string_view name) const;
  // Index into `actions`, or -1.
  int action_index(std::string_view name) const;

  bool operator==(const DomainSpec&) const = default;
};

struct UserTurn {
  std::string intent;
  std::map<std::string, std::string> entities;

  bool operator==(const UserTurn&) const = default;
};

struct ActionStep {
  std::string name;

  bool operator==(const ActionStep&) const = default;
};

using Step = std::variant<UserTurn, ActionStep>;

struct Dialogue {
  std::string name;
  std::vector<Step> steps;

  std::size_t action_count() const;
  std::size_t user_turn_count() const;

  // Equality includes the name; use same_steps() for name-blind comparison.
  bool operator==(const Dialogue&) const = default;
};

bool is_user(const Step& step);
bool is_action(const Step& step);
bool same_steps(const Dialogue& a, const Dialogue& b);

// Throws SchemaViolation unless the spec satisfies the domain invariants.
void validate_domain(const DomainSpec& spec);

// Domain document: a JSON object with string arrays intents/entities/slots/
// actions. `action_listen` is appended when missing.
DomainSpec parse_domain(std::string_view text);
std::string serialize_domain(const DomainSpec& spec);

// Union of several domains, keeping first-seen order.
DomainSpec merge_domains(const std::vector<DomainSpec>& specs);

std::vector<Dialogue> parse_stories(std::string_view text, const DomainSpec& spec);
std::string serialize_stories(const std::vector<Dialogue>& dialogues);

// Checks identifiers and step ordering against the domain.
void validate_dialogue(const Dialogue& d, const DomainSpec& spec);

Dialogue expand_listen(const Dialogue& d);
std::vector<Dialogue> expand_listen(const std::vector<Dialogue>& dialogues);

// First occurrence kept; names are ignored when comparing.
std::vector<Dialogue> dedupe(const std::vector<Dialogue>& dialogues);

struct Split {
  std::vector<Dialogue> train;
  std::vector<Dialogue> test;
};

// Seeded partition. Both halves keep the input's relative order.
Split split(const std::vector<Dialogue>& dialogues, std::size_t n_test,
            std::uint64_t seed);

}  // namespace redp::corpus

#endif  // REDP_CORPUS_HPP_
