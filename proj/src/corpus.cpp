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

#include "redp/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"
#include "redp/error.hpp"
#include "redp/rng.hpp"
#include "redp/util.hpp"

namespace redp::corpus {

using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& items, std::string_view name) {
  return std::find(items.begin(), items.end(), name) != items.end();
}

void check_list(const std::vector<std::string>& items, const char* key) {
  if (items.empty()) {
    throw Error(ErrorKind::kSchemaViolation, std::string(key) + " must be non-empty");
  }
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!util::is_identifier(item)) {
      throw Error(ErrorKind::kSchemaViolation,
                  std::string("bad identifier in ") + key + ": '" + item + "'");
    }
    if (!seen.insert(item).second) {
      throw Error(ErrorKind::kSchemaViolation,
                  std::string("duplicate in ") + key + ": " + item);
    }
  }
}

std::vector<std::string> string_array(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw Error(ErrorKind::kSchemaViolation, std::string("missing key '") + key + "'");
  }
  const json& arr = doc.at(key);
  if (!arr.is_array()) {
    throw Error(ErrorKind::kSchemaViolation, std::string(key) + " must be an array");
  }
  std::vector<std::string> out;
  for (const auto& item : arr) {
    if (!item.is_string()) {
      throw Error(ErrorKind::kSchemaViolation,
                  std::string(key) + " must contain only strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string location(std::size_t line_no) {
  return "line " + std::to_string(line_no);
}

UserTurn parse_user_line(std::string_view body, std::size_t line_no,
                         const DomainSpec& spec) {
  UserTurn turn;
  std::size_t brace = body.find('{');
  std::string_view intent = util::trim(body.substr(0, brace));
  turn.intent = std::string(intent);
  if (!util::is_identifier(intent)) {
    throw Error(ErrorKind::kMalformedDocument,
                location(line_no) + ": bad intent '" + turn.intent + "'");
  }
  if (!spec.has_intent(intent)) {
    throw Error(ErrorKind::kUnknownIdentifier,
                location(line_no) + ": unknown intent '" + turn.intent + "'");
  }
  if (brace == std::string_view::npos) return turn;

  json payload;
  try {
    payload = json::parse(body.substr(brace));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument,
                location(line_no) + ": bad entity object: " + e.what());
  }
  if (!payload.is_object()) {
    throw Error(ErrorKind::kMalformedDocument,
                location(line_no) + ": entities must be an object");
  }
  for (const auto& [key, value] : payload.items()) {
    if (!value.is_string()) {
      throw Error(ErrorKind::kMalformedDocument,
                  location(line_no) + ": entity '" + key + "' must be a string");
    }
    if (!spec.has_entity(key)) {
      throw Error(ErrorKind::kUnknownIdentifier,
                  location(line_no) + ": unknown entity '" + key + "'");
    }
    turn.entities[key] = value.get<std::string>();
  }
  return turn;
}

}  // namespace

bool DomainSpec::has_intent(std::string_view name) const { return contains(intents, name); }
bool DomainSpec::has_entity(std::string_view name) const { return contains(entities, name); }
bool DomainSpec::has_action(std::string_view name) const { return contains(actions, name); }

int DomainSpec::action_index(std::string_view name) const {
  auto it = std::find(actions.begin(), actions.end(), name);
  return it == actions.end() ? -1 : static_cast<int>(it - actions.begin());
}

std::size_t Dialogue::action_count() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), is_action));
}

std::size_t Dialogue::user_turn_count() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), is_user));
}

bool is_user(const Step& step) { return std::holds_alternative<UserTurn>(step); }
bool is_action(const Step& step) { return std::holds_alternative<ActionStep>(step); }

bool same_steps(const Dialogue& a, const Dialogue& b) { return a.steps == b.steps; }

void validate_domain(const DomainSpec& spec) {
  check_list(spec.intents, "intents");
  check_list(spec.entities, "entities");
  check_list(spec.slots, "slots");
  check_list(spec.actions, "actions");
  if (!spec.has_action(kActionListen)) {
    throw Error(ErrorKind::kSchemaViolation, "actions must include action_listen");
  }
  for (const auto& slot : spec.slots) {
    if (!spec.has_entity(slot)) {
      throw Error(ErrorKind::kSchemaViolation,
                  "slot '" + slot + "' has no entity of the same name");
    }
  }
}

DomainSpec parse_domain(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::kMalformedDocument, "domain document must be an object");
  }
  DomainSpec spec;
  spec.intents = string_array(doc, "intents");
  spec.entities = string_array(doc, "entities");
  spec.slots = string_array(doc, "slots");
  spec.actions = string_array(doc, "actions");
  if (!spec.has_action(kActionListen)) spec.actions.emplace_back(kActionListen);
  validate_domain(spec);
  return spec;
}

std::string serialize_domain(const DomainSpec& spec) {
  json doc = json::object();
  doc["intents"] = spec.intents;
  doc["entities"] = spec.entities;
  doc["slots"] = spec.slots;
  doc["actions"] = spec.actions;
  return doc.dump(2) + "\n";
}

DomainSpec merge_domains(const std::vector<DomainSpec>& specs) {
  DomainSpec out;
  auto add_all = [](std::vector<std::string>& dst, const std::vector<std::string>& src) {
    for (const auto& s : src) {
      if (!contains(dst, s)) dst.push_back(s);
    }
  };
  for (const auto& spec : specs) {
    add_all(out.intents, spec.intents);
    add_all(out.entities, spec.entities);
    add_all(out.slots, spec.slots);
    add_all(out.actions, spec.actions);
  }
  return out;
}

std::vector<Dialogue> parse_stories(std::string_view text, const DomainSpec& spec) {
  std::vector<Dialogue> dialogues;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    std::string_view line = util::trim(raw);
    if (line.empty()) continue;
    if (util::starts_with(line, "##")) {
      Dialogue d;
      d.name = std::string(util::trim(line.substr(2)));
      dialogues.push_back(std::move(d));
      continue;
    }
    if (line[0] == '#') continue;

    if (dialogues.empty()) {
      throw Error(ErrorKind::kMalformedDocument,
                  location(line_no) + ": step outside of a story");
    }
    Dialogue& current = dialogues.back();
    if (line[0] == '*') {
      current.steps.emplace_back(parse_user_line(line.substr(1), line_no, spec));
    } else if (line[0] == '-') {
      std::string name(util::trim(line.substr(1)));
      if (!util::is_identifier(name)) {
        throw Error(ErrorKind::kMalformedDocument,
                    location(line_no) + ": bad action name '" + name + "'");
      }
      if (!spec.has_action(name)) {
        throw Error(ErrorKind::kUnknownIdentifier,
                    location(line_no) + ": unknown action '" + name + "'");
      }
      current.steps.emplace_back(ActionStep{std::move(name)});
    } else {
      throw Error(ErrorKind::kMalformedDocument,
                  location(line_no) + ": unrecognised line '" + std::string(line) + "'");
    }
  }
  for (const auto& d : dialogues) {
    if (d.steps.empty()) {
      throw Error(ErrorKind::kMalformedDocument, "story '" + d.name + "' is empty");
    }
    if (!is_user(d.steps.front())) {
      throw Error(ErrorKind::kMalformedDocument,
                  "story '" + d.name + "' must start with a user turn");
    }
  }
  return dialogues;
}

std::string serialize_stories(const std::vector<Dialogue>& dialogues) {
  std::string out;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    if (i) out += '\n';
    out += "## " + dialogues[i].name + "\n";
    for (const auto& step : dialogues[i].steps) {
      if (const auto* user = std::get_if<UserTurn>(&step)) {
        out += "* " + user->intent;
        if (!user->entities.empty()) {
          json obj = json::object();
          for (const auto& [k, v] : user->entities) obj[k] = v;
          out += obj.dump();
        }
        out += '\n';
      } else {
        out += "  - " + std::get<ActionStep>(step).name + "\n";
      }
    }
  }
  return out;
}

void validate_dialogue(const Dialogue& d, const DomainSpec& spec) {
  if (d.steps.empty() || !is_user(d.steps.front())) {
    throw Error(ErrorKind::kMalformedDocument,
                "dialogue '" + d.name + "' must start with a user turn");
  }
  for (const auto& step : d.steps) {
    if (const auto* user = std::get_if<UserTurn>(&step)) {
      if (!spec.has_intent(user->intent)) {
        throw Error(ErrorKind::kUnknownIdentifier, "unknown intent '" + user->intent + "'");
      }
      for (const auto& [name, value] : user->entities) {
        if (!spec.has_entity(name)) {
          throw Error(ErrorKind::kUnknownIdentifier, "unknown entity '" + name + "'");
        }
      }
    } else {
      const auto& name = std::get<ActionStep>(step).name;
      if (!spec.has_action(name)) {
        throw Error(ErrorKind::kUnknownIdentifier, "unknown action '" + name + "'");
      }
    }
  }
}

Dialogue expand_listen(const Dialogue& d) {
  Dialogue out;
  out.name = d.name;
  out.steps.reserve(d.steps.size() + d.user_turn_count());
  auto close_run = [&out, &d]() {
    // Called before a user step (other than the first) and at the end.
    if (out.steps.empty() || is_user(out.steps.back())) {
      throw Error(ErrorKind::kIncompleteTurn,
                  "dialogue '" + d.name + "' has a user turn without actions");
    }
    if (std::get<ActionStep>(out.steps.back()).name != kActionListen) {
      out.steps.emplace_back(ActionStep{std::string(kActionListen)});
    }
  };
  for (const auto& step : d.steps) {
    if (is_user(step)) {
      if (!out.steps.empty()) close_run();
      out.steps.push_back(step);
    } else {
      // Collapse repeated trailing listens into one.
      const auto& name = std::get<ActionStep>(step).name;
      if (name == kActionListen && !out.steps.empty() && is_action(out.steps.back()) &&
          std::get<ActionStep>(out.steps.back()).name == kActionListen) {
        continue;
      }
      out.steps.push_back(step);
    }
  }
  if (out.steps.empty()) {
    throw Error(ErrorKind::kIncompleteTurn, "dialogue '" + d.name + "' is empty");
  }
  close_run();
  return out;
}

std::vector<Dialogue> expand_listen(const std::vector<Dialogue>& dialogues) {
  std::vector<Dialogue> out;
  out.reserve(dialogues.size());
  for (const auto& d : dialogues) out.push_back(expand_listen(d));
  return out;
}

std::vector<Dialogue> dedupe(const std::vector<Dialogue>& dialogues) {
  std::vector<Dialogue> out;
  // Serialized step sequences act as keys; the name line is excluded.
  std::set<std::string> seen;
  for (const auto& d : dialogues) {
    Dialogue anon{"", d.steps};
    if (seen.insert(serialize_stories({anon})).second) out.push_back(d);
  }
  return out;
}

Split split(const std::vector<Dialogue>& dialogues, std::size_t n_test,
            std::uint64_t seed) {
  if (n_test > 0 && n_test >= dialogues.size()) {
    throw Error(ErrorKind::kNotEnoughDialogues,
                "need more than " + std::to_string(n_test) + " dialogues, have " +
                    std::to_string(dialogues.size()));
  }
  std::vector<std::size_t> order(dialogues.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> is_test(dialogues.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  Split out;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    (is_test[i] ? out.test : out.train).push_back(dialogues[i]);
  }
  return out;
}

}  // namespace redp::corpus
