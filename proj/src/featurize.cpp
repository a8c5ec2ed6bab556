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

#include "redp/featurize.hpp"

#include <algorithm>
#include <set>

#include "redp/error.hpp"

namespace redp::feat {

using corpus::ActionStep;
using corpus::Dialogue;
using corpus::UserTurn;

std::string_view mode_name(ActionFeatMode mode) {
  return mode == ActionFeatMode::kSingleLabel ? "single_label" : "token_bag";
}

ActionFeatMode parse_mode(std::string_view name) {
  if (name == "single_label") return ActionFeatMode::kSingleLabel;
  if (name == "token_bag") return ActionFeatMode::kTokenBag;
  throw Error(ErrorKind::kSchemaViolation,
              "action_feat_mode must be single_label or token_bag");
}

std::vector<std::string> tokens_of(std::string_view name) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= name.size()) {
    std::size_t pos = name.find('_', start);
    if (pos == std::string_view::npos) pos = name.size();
    if (pos > start) out.emplace_back(name.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

namespace {

std::vector<std::string> sorted_unique(std::set<std::string> items) {
  return {items.begin(), items.end()};
}

void index_into(const std::vector<std::string>& items,
                std::map<std::string, int, std::less<>>& index) {
  for (std::size_t i = 0; i < items.size(); ++i) index[items[i]] = static_cast<int>(i);
}

int lookup(const std::map<std::string, int, std::less<>>& index, std::string_view key) {
  auto it = index.find(key);
  return it == index.end() ? -1 : it->second;
}

}  // namespace

Vocabulary::Vocabulary(const corpus::DomainSpec& spec, ActionFeatMode mode)
    : mode_(mode), slot_names_(spec.slots), action_names_(spec.actions) {
  std::set<std::string> user;
  for (const auto& intent : spec.intents) {
    for (auto& tok : tokens_of(intent)) user.insert(std::move(tok));
  }
  for (const auto& entity : spec.entities) user.insert(entity);
  user_tokens_ = sorted_unique(std::move(user));

  std::set<std::string> action;
  for (const auto& name : spec.actions) {
    if (mode == ActionFeatMode::kSingleLabel) {
      action.insert(name);
    } else {
      for (auto& tok : tokens_of(name)) action.insert(std::move(tok));
    }
  }
  action_tokens_ = sorted_unique(std::move(action));
  std::sort(slot_names_.begin(), slot_names_.end());

  index_into(user_tokens_, user_index_);
  index_into(action_tokens_, action_token_index_);
  index_into(slot_names_, slot_index_);
  index_into(action_names_, action_index_);
}

int Vocabulary::user_index(std::string_view token) const { return lookup(user_index_, token); }
int Vocabulary::action_token_index(std::string_view token) const {
  return lookup(action_token_index_, token);
}
int Vocabulary::slot_index(std::string_view slot) const { return lookup(slot_index_, slot); }
int Vocabulary::action_index(std::string_view action) const {
  return lookup(action_index_, action);
}

Vocabulary build_vocabulary(const corpus::DomainSpec& spec, ActionFeatMode mode) {
  return Vocabulary(spec, mode);
}

std::vector<double> featurize_user(const UserTurn& turn, const Vocabulary& vocab) {
  std::vector<double> vec(vocab.user_tokens().size(), 0.0);
  auto bump = [&](std::string_view tok) {
    int idx = vocab.user_index(tok);
    if (idx < 0) {
      throw Error(ErrorKind::kUnknownIdentifier, "unknown user token '" + std::string(tok) + "'");
    }
    vec[idx] += 1.0;
  };
  for (const auto& tok : tokens_of(turn.intent)) bump(tok);
  for (const auto& [entity, value] : turn.entities) bump(entity);
  return vec;
}

std::vector<double> featurize_action(std::string_view name, const Vocabulary& vocab) {
  if (vocab.action_index(name) < 0) {
    throw Error(ErrorKind::kUnknownIdentifier, "unknown action '" + std::string(name) + "'");
  }
  std::vector<double> vec(vocab.action_tokens().size(), 0.0);
  if (vocab.mode() == ActionFeatMode::kSingleLabel) {
    vec[vocab.action_token_index(name)] = 1.0;
  } else {
    for (const auto& tok : tokens_of(name)) vec[vocab.action_token_index(tok)] += 1.0;
  }
  return vec;
}

std::vector<double> action_feature_table(const Vocabulary& vocab) {
  const std::size_t width = vocab.action_tokens().size();
  std::vector<double> table;
  table.reserve(vocab.action_names().size() * width);
  for (const auto& name : vocab.action_names()) {
    auto row = featurize_action(name, vocab);
    table.insert(table.end(), row.begin(), row.end());
  }
  return table;
}

std::vector<std::vector<double>> track_slots(const Dialogue& d,
                                             const corpus::DomainSpec& spec) {
  const auto& slot_names = spec.slots;
  std::vector<std::vector<double>> out;
  std::vector<double> current(slot_names.size(), 0.0);
  for (const auto& step : d.steps) {
    const auto* user = std::get_if<UserTurn>(&step);
    if (!user) continue;
    for (std::size_t i = 0; i < slot_names.size(); ++i) {
      if (user->entities.count(slot_names[i])) current[i] = 1.0;
    }
    out.push_back(current);
  }
  return out;
}

std::map<std::string, std::string> slot_values(const Dialogue& d) {
  std::map<std::string, std::string> values;
  for (const auto& step : d.steps) {
    if (const auto* user = std::get_if<UserTurn>(&step)) {
      for (const auto& [k, v] : user->entities) values[k] = v;
    }
  }
  return values;
}

std::vector<TurnFeatures> featurize_dialogue(const Dialogue& d, const Vocabulary& vocab) {
  std::vector<TurnFeatures> out;
  std::vector<double> user_vec(vocab.user_tokens().size(), 0.0);
  std::vector<double> slot_vec(vocab.slot_names().size(), 0.0);
  int prev = -1;
  for (const auto& step : d.steps) {
    if (const auto* user = std::get_if<UserTurn>(&step)) {
      user_vec = featurize_user(*user, vocab);
      for (const auto& [entity, value] : user->entities) {
        int idx = vocab.slot_index(entity);
        if (idx >= 0) slot_vec[idx] = 1.0;
      }
      continue;
    }
    const auto& name = std::get<ActionStep>(step).name;
    int idx = vocab.action_index(name);
    if (idx < 0) {
      throw Error(ErrorKind::kUnknownIdentifier, "unknown action '" + name + "'");
    }
    out.push_back(TurnFeatures{user_vec, slot_vec, name, idx, prev});
    prev = idx;
  }
  return out;
}

}  // namespace redp::feat
