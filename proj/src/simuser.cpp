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

#include "redp/simuser.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "json.hpp"
#include "redp/error.hpp"
#include "redp/util.hpp"

namespace redp::sim {

using corpus::ActionStep;
using corpus::Dialogue;
using corpus::UserTurn;

std::string TaskSpec::ask_action(std::string_view slot) const {
  return "utter_ask_" + std::string(slot);
}

std::string TaskSpec::explain_action(std::string_view slot) const {
  return "utter_explain_" + std::string(slot) + "_" + domain;
}

TaskSpec hotel_task() {
  return {"hotel", {"price", "location", "people", "start_date", "end_date"}};
}

TaskSpec restaurant_task() { return {"restaurant", {"price", "location", "people", "cuisine"}}; }

TaskSpec task_by_name(std::string_view domain) {
  if (domain == "hotel") return hotel_task();
  if (domain == "restaurant") return restaurant_task();
  throw Error(ErrorKind::kSchemaViolation,
              "unknown domain '" + std::string(domain) + "' (valid: hotel, restaurant)");
}

corpus::DomainSpec task_domain(const TaskSpec& task) {
  corpus::DomainSpec spec;
  spec.intents = {std::string(kGreet),    std::string(kInform), std::string(kCorrect),
                  std::string(kChitchat), std::string(kAskWhy), std::string(kAskResults)};
  spec.entities = task.slots;
  spec.slots = task.slots;
  spec.actions.emplace_back(kUtterGreet);
  for (const auto& s : task.slots) spec.actions.push_back(task.ask_action(s));
  for (const auto& s : task.slots) spec.actions.push_back(task.explain_action(s));
  spec.actions.push_back(task.details_action());
  spec.actions.emplace_back(kNotEnoughInfo);
  spec.actions.emplace_back(kAckCorrection);
  spec.actions.emplace_back(kChitchatAction);
  spec.actions.push_back(task.search_action());
  spec.actions.emplace_back(corpus::kActionListen);
  corpus::validate_domain(spec);
  return spec;
}

std::string_view deviation_name(DeviationType type) {
  switch (type) {
    case DeviationType::kCooperate: return "cooperate";
    case DeviationType::kChitchat: return "chitchat";
    case DeviationType::kCorrection: return "correction";
    case DeviationType::kBroadContext: return "broad_context";
    case DeviationType::kNarrowContext: return "narrow_context";
  }
  return "?";
}

DeviationType classify_turn(const UserTurn& turn) {
  if (turn.intent == kChitchat) return DeviationType::kChitchat;
  if (turn.intent == kCorrect) return DeviationType::kCorrection;
  if (turn.intent == kAskResults) return DeviationType::kBroadContext;
  if (turn.intent == kAskWhy) return DeviationType::kNarrowContext;
  return DeviationType::kCooperate;
}

ValueTable load_values(const std::filesystem::path& dir) {
  const std::string text = util::read_file(dir / "values.json");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, std::string("values.json: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kSchemaViolation, "values.json must be an object");
  ValueTable out;
  for (const auto& [slot, list] : doc.items()) {
    if (!list.is_array() || list.size() < 2) {
      throw Error(ErrorKind::kSchemaViolation, "values for '" + slot + "' need at least two entries");
    }
    for (const auto& v : list) {
      if (!v.is_string()) throw Error(ErrorKind::kSchemaViolation, "values must be strings");
      out[slot].push_back(v.get<std::string>());
    }
  }
  return out;
}

namespace {

std::optional<std::string> first_missing(const std::map<std::string, std::string>& filled,
                                         const TaskSpec& task) {
  for (const auto& s : task.slots) {
    if (!filled.count(s)) return s;
  }
  return std::nullopt;
}

bool is_task_slot(const TaskSpec& task, const std::string& name) {
  return std::find(task.slots.begin(), task.slots.end(), name) != task.slots.end();
}

void inconsistent(const std::string& msg) { throw Error(ErrorKind::kInconsistentState, msg); }

const std::vector<std::string>& values_for(const ValueTable& values, const std::string& slot) {
  auto it = values.find(slot);
  if (it == values.end() || it->second.empty()) {
    throw Error(ErrorKind::kSchemaViolation, "no values for slot '" + slot + "'");
  }
  return it->second;
}

std::string pick(const std::vector<std::string>& list, Rng& rng) {
  return list[rng.below(list.size())];
}

}  // namespace

SimState initial_state(const TaskSpec& task, int deviation_budget) {
  SimState s;
  s.pending = first_missing(s.filled, task);
  s.deviation_budget = deviation_budget;
  return s;
}

std::vector<std::string> oracle_action(const SimState& state, const UserTurn& turn,
                                       const TaskSpec& task) {
  if (state.done) inconsistent("dialogue already finished");
  for (const auto& [entity, value] : turn.entities) {
    if (!is_task_slot(task, entity)) inconsistent("entity '" + entity + "' is not a task slot");
  }
  SimState after = state;
  advance(after, turn, task);
  const std::string listen(corpus::kActionListen);

  auto ask_next = [&](std::vector<std::string> head) {
    if (after.pending) {
      head.push_back(task.ask_action(*after.pending));
      head.push_back(listen);
    } else {
      head.push_back(task.search_action());
    }
    return head;
  };
  auto require_pending = [&]() -> const std::string& {
    if (!state.pending) inconsistent("no pending slot for '" + turn.intent + "'");
    return *state.pending;
  };

  if (turn.intent == kGreet) return ask_next({std::string(kUtterGreet)});
  if (turn.intent == kInform) {
    if (turn.entities.empty()) inconsistent("inform without entities");
    return ask_next({});
  }
  if (turn.intent == kCorrect) {
    if (turn.entities.empty()) inconsistent("correction without entities");
    for (const auto& [entity, value] : turn.entities) {
      if (!state.filled.count(entity)) inconsistent("correction of unfilled slot '" + entity + "'");
    }
    return ask_next({std::string(kAckCorrection)});
  }
  if (turn.intent == kChitchat) {
    const auto& slot = require_pending();
    return {std::string(kChitchatAction), task.ask_action(slot), listen};
  }
  if (turn.intent == kAskWhy) {
    const auto& slot = require_pending();
    return {task.explain_action(slot), task.ask_action(slot), listen};
  }
  if (turn.intent == kAskResults) {
    if (!state.pending) return {task.search_action()};
    return ask_next({task.details_action()});
  }
  inconsistent("no oracle rule for intent '" + turn.intent + "'");
  return {};
}

void advance(SimState& state, const UserTurn& turn, const TaskSpec& task) {
  if (state.done) inconsistent("dialogue already finished");
  ++state.user_turns;
  if (classify_turn(turn) != DeviationType::kCooperate) ++state.deviations;
  if (turn.intent == kInform || turn.intent == kCorrect) {
    for (const auto& [entity, value] : turn.entities) {
      if (!is_task_slot(task, entity)) inconsistent("entity '" + entity + "' is not a task slot");
      state.filled[entity] = value;
    }
  }
  state.pending = first_missing(state.filled, task);
  state.done = !state.pending.has_value();
}

namespace {

std::pair<UserTurn, DeviationType> make_turn(const SimState& state, const TaskSpec& task,
                                             const ValueTable& values, DeviationType type,
                                             Rng& rng) {
  UserTurn turn;
  if (type == DeviationType::kCorrection && state.filled.empty()) {
    type = DeviationType::kCooperate;
  }
  switch (type) {
    case DeviationType::kCooperate: {
      if (!state.pending) inconsistent("cooperative turn with nothing to inform");
      turn.intent = kInform;
      turn.entities[*state.pending] = pick(values_for(values, *state.pending), rng);
      break;
    }
    case DeviationType::kCorrection: {
      std::vector<std::string> filled;
      for (const auto& s : task.slots) {
        if (state.filled.count(s)) filled.push_back(s);
      }
      const std::string& slot = filled[rng.below(filled.size())];
      std::vector<std::string> others;
      for (const auto& v : values_for(values, slot)) {
        if (v != state.filled.at(slot)) others.push_back(v);
      }
      if (others.empty()) inconsistent("no alternative value for '" + slot + "'");
      turn.intent = kCorrect;
      turn.entities[slot] = pick(others, rng);
      break;
    }
    case DeviationType::kChitchat: turn.intent = kChitchat; break;
    case DeviationType::kBroadContext: turn.intent = kAskResults; break;
    case DeviationType::kNarrowContext: turn.intent = kAskWhy; break;
  }
  return {turn, type};
}

void append_turn(Dialogue& d, const UserTurn& turn, const std::vector<std::string>& actions) {
  d.steps.emplace_back(turn);
  for (const auto& a : actions) d.steps.emplace_back(ActionStep{a});
}

Dialogue simulate(const TaskSpec& task, int max_user_turns, Rng& rng, const ValueTable& values,
                  std::string name, const ActionProposer* propose, std::size_t* fixed) {
  const int budget = std::max(0, max_user_turns - static_cast<int>(task.slots.size()) - 1);
  SimState state = initial_state(task, budget);
  Dialogue d;
  d.name = std::move(name);
  auto play = [&](const UserTurn& turn) {
    auto actions = oracle_action(state, turn, task);
    d.steps.emplace_back(turn);
    for (const auto& a : actions) {
      if (propose && fixed && (*propose)(d) != a) ++*fixed;
      d.steps.emplace_back(ActionStep{a});
    }
    advance(state, turn, task);
  };

  play(UserTurn{std::string(kGreet), {}});
  while (!state.done && state.user_turns < max_user_turns) {
    auto type = static_cast<DeviationType>(rng.below(kDeviationTypeCount));
    const bool last_slot = state.filled.size() + 1 == task.slots.size();
    if (type == DeviationType::kCooperate && last_slot && state.deviations == 0 && budget > 0) {
      type = static_cast<DeviationType>(1 + rng.below(kDeviationTypeCount - 1));
    }
    if (type != DeviationType::kCooperate && state.deviations >= budget) {
      type = DeviationType::kCooperate;
    }
    play(make_turn(state, task, values, type, rng).first);
  }
  return corpus::expand_listen(d);
}

std::string step_key(const Dialogue& d) {
  Dialogue anon = d;
  anon.name.clear();
  return corpus::serialize_stories({anon});
}

}  // namespace

std::pair<UserTurn, DeviationType> sample_user_turn(const SimState& state, const TaskSpec& task,
                                                    const ValueTable& values, Rng& rng) {
  if (state.done) inconsistent("dialogue already finished");
  auto type = static_cast<DeviationType>(rng.below(kDeviationTypeCount));
  return make_turn(state, task, values, type, rng);
}

std::vector<Dialogue> generate_dialogues(const TaskSpec& task, std::size_t n,
                                         int max_user_turns, std::uint64_t seed,
                                         const ValueTable& values) {
  Rng base(seed);
  std::vector<Dialogue> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.fork(i);
    out.push_back(simulate(task, max_user_turns, rng, values,
                           task.domain + "_generated_" + std::to_string(i), nullptr, nullptr));
  }
  return corpus::dedupe(out);
}

std::vector<Dialogue> generate_unique(const TaskSpec& task, std::size_t n, int max_user_turns,
                                      std::uint64_t seed, const ValueTable& values) {
  Rng base(seed);
  std::vector<Dialogue> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; out.size() < n; ++i) {
    if (i > 100 * n + 1000) {
      throw Error(ErrorKind::kNotEnoughDialogues, "cannot generate " + std::to_string(n) +
                                                      " unique dialogues");
    }
    Rng rng = base.fork(i);
    Dialogue d = simulate(task, max_user_turns, rng, values,
                          task.domain + "_generated_" + std::to_string(i), nullptr, nullptr);
    if (seen.insert(step_key(d)).second) out.push_back(std::move(d));
  }
  return out;
}

std::pair<std::vector<Dialogue>, std::size_t> generate_bootstrapped(
    const TaskSpec& task, std::size_t n, int max_user_turns, std::uint64_t seed,
    const ValueTable& values, const ActionProposer& propose) {
  Rng base(seed);
  std::vector<Dialogue> out;
  std::size_t fixed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.fork(i);
    out.push_back(simulate(task, max_user_turns, rng, values,
                           task.domain + "_generated_" + std::to_string(i), &propose, &fixed));
  }
  return {corpus::dedupe(out), fixed};
}

Dialogue replay_labels(const Dialogue& d, const TaskSpec& task) {
  SimState state = initial_state(task, 0);
  Dialogue out;
  out.name = d.name;
  for (const auto& step : d.steps) {
    if (const auto* turn = std::get_if<UserTurn>(&step)) {
      append_turn(out, *turn, oracle_action(state, *turn, task));
      advance(state, *turn, task);
    }
  }
  return corpus::expand_listen(out);
}

std::vector<CooperativePlan> cooperative_plans(const TaskSpec& task) {
  if (task.domain == "hotel") {
    return {{true, {1, 1, 1, 1, 1}}, {true, {2, 1, 1, 1}}, {true, {1, 2, 1, 1}},
            {true, {1, 1, 1, 2}},    {true, {3, 1, 1}},    {true, {5}},
            {false, {1, 1, 1, 1, 1}}, {false, {2, 2, 1}},  {false, {3, 2}},
            {true, {2, 3}},          {false, {1, 1, 3}}};
  }
  if (task.domain == "restaurant") {
    return {{true, {1, 1, 1, 1}}, {true, {2, 1, 1}},  {true, {1, 2, 1}},  {true, {4}},
            {false, {1, 1, 1, 1}}, {false, {2, 2}}, {true, {1, 3}}, {false, {3, 1}}};
  }
  return {{true, std::vector<int>(task.slots.size(), 1)}};
}

std::vector<Dialogue> cooperative_dialogues(const TaskSpec& task, const ValueTable& values,
                                            std::uint64_t seed) {
  Rng base(seed);
  std::vector<Dialogue> out;
  const auto plans = cooperative_plans(task);
  for (std::size_t k = 0; k < plans.size(); ++k) {
    Rng rng = base.fork(k);
    SimState state = initial_state(task, 0);
    Dialogue d;
    d.name = task.domain + "_cooperative_" + std::to_string(k + 1);
    auto play = [&](const UserTurn& turn) {
      append_turn(d, turn, oracle_action(state, turn, task));
      advance(state, turn, task);
    };
    if (plans[k].greet) play(UserTurn{std::string(kGreet), {}});
    std::size_t next = 0;
    for (int chunk : plans[k].chunks) {
      UserTurn turn{std::string(kInform), {}};
      for (int j = 0; j < chunk; ++j, ++next) {
        const auto& slot = task.slots.at(next);
        turn.entities[slot] = pick(values_for(values, slot), rng);
      }
      play(turn);
    }
    if (!state.done) inconsistent("cooperative plan leaves slots unfilled");
    out.push_back(corpus::expand_listen(d));
  }
  return out;
}

std::vector<Dialogue> single_deviation_dialogues(const TaskSpec& task, const ValueTable& values,
                                                 std::uint64_t seed) {
  Rng base(seed);
  std::vector<Dialogue> out;
  const std::size_t positions[2] = {1, task.slots.size() - 2};
  const DeviationType types[4] = {DeviationType::kChitchat, DeviationType::kCorrection,
                                  DeviationType::kBroadContext, DeviationType::kNarrowContext};
  for (DeviationType type : types) {
    for (std::size_t pos : positions) {
      Rng rng = base.fork(out.size());
      SimState state = initial_state(task, 1);
      Dialogue d;
      d.name = task.domain + "_" + std::string(deviation_name(type)) + "_at_" +
               task.slots[pos];
      auto play = [&](const UserTurn& turn) {
        append_turn(d, turn, oracle_action(state, turn, task));
        advance(state, turn, task);
      };
      play(UserTurn{std::string(kGreet), {}});
      while (!state.done) {
        if (state.deviations == 0 && state.filled.size() == pos) {
          play(make_turn(state, task, values, type, rng).first);
        } else {
          play(make_turn(state, task, values, DeviationType::kCooperate, rng).first);
        }
      }
      out.push_back(corpus::expand_listen(d));
    }
  }
  return out;
}

std::filesystem::path default_bundle_dir() {
  if (const char* env = std::getenv("REDP_DATA_DIR"); env && *env) {
    return std::filesystem::path(env) / "v1";
  }
  return std::filesystem::path(REDP_DATA_DIR) / "v1";
}

namespace {

constexpr const char* kBundleFiles[] = {
    "values.json",
    "hotel.domain.json",
    "restaurant.domain.json",
    "cooperative_hotel.stories",
    "cooperative_restaurant.stories",
    "uncooperative_seed_hotel.stories",
    "uncooperative_seed_restaurant.stories",
};

}  // namespace

BundledCorpora handcrafted_corpora(const std::filesystem::path& dir) {
  const std::string manifest = util::read_file(dir / kBundleManifest);
  std::map<std::string, std::string> expected;
  for (const auto& raw : util::split(manifest, '\n')) {
    auto line = util::trim(raw);
    if (line.empty()) continue;
    auto parts = util::split(line, ' ');
    parts.erase(std::remove(parts.begin(), parts.end(), ""), parts.end());
    if (parts.size() != 2 || parts[0].size() != 16) {
      throw Error(ErrorKind::kCorruptBundle, "bad manifest line: " + std::string(line));
    }
    expected[parts[1]] = parts[0];
  }
  std::map<std::string, std::string> contents;
  for (const char* name : kBundleFiles) {
    auto it = expected.find(name);
    if (it == expected.end()) {
      throw Error(ErrorKind::kCorruptBundle, std::string("manifest does not list ") + name);
    }
    std::string text = util::read_file(dir / name);
    if (util::hex64(util::fnv1a64(text)) != it->second) {
      throw Error(ErrorKind::kCorruptBundle, std::string("checksum mismatch for ") + name);
    }
    contents[name] = std::move(text);
  }
  BundledCorpora b;
  b.values = load_values(dir);
  b.hotel_domain = corpus::parse_domain(contents["hotel.domain.json"]);
  b.restaurant_domain = corpus::parse_domain(contents["restaurant.domain.json"]);
  auto stories = [&](const char* name, const corpus::DomainSpec& spec) {
    return corpus::expand_listen(corpus::parse_stories(contents[name], spec));
  };
  b.cooperative_hotel = stories("cooperative_hotel.stories", b.hotel_domain);
  b.cooperative_restaurant = stories("cooperative_restaurant.stories", b.restaurant_domain);
  b.uncooperative_seed_hotel = stories("uncooperative_seed_hotel.stories", b.hotel_domain);
  b.uncooperative_seed_restaurant =
      stories("uncooperative_seed_restaurant.stories", b.restaurant_domain);
  return b;
}

std::vector<std::string> write_bundle(const std::filesystem::path& dir, std::uint64_t seed) {
  const ValueTable values = load_values(dir);
  const TaskSpec hotel = hotel_task();
  const TaskSpec restaurant = restaurant_task();
  std::map<std::string, std::string> files;
  files["values.json"] = util::read_file(dir / "values.json");
  files["hotel.domain.json"] = corpus::serialize_domain(task_domain(hotel));
  files["restaurant.domain.json"] = corpus::serialize_domain(task_domain(restaurant));
  files["cooperative_hotel.stories"] =
      corpus::serialize_stories(cooperative_dialogues(hotel, values, seed));
  files["cooperative_restaurant.stories"] =
      corpus::serialize_stories(cooperative_dialogues(restaurant, values, seed + 1));
  files["uncooperative_seed_hotel.stories"] =
      corpus::serialize_stories(single_deviation_dialogues(hotel, values, seed + 2));
  files["uncooperative_seed_restaurant.stories"] =
      corpus::serialize_stories(generate_unique(restaurant, 50, 12, seed + 3, values));
  std::string manifest;
  std::vector<std::string> written;
  for (const char* name : kBundleFiles) {
    const std::string& text = files.at(name);
    if (std::string(name) != "values.json") util::write_file_atomic(dir / name, text);
    manifest += util::hex64(util::fnv1a64(text)) + "  " + name + "\n";
    written.emplace_back(name);
  }
  util::write_file_atomic(dir / kBundleManifest, manifest);
  written.emplace_back(kBundleManifest);
  return written;
}

}  // namespace redp::sim
