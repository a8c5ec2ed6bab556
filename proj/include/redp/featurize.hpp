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

#ifndef REDP_FEATURIZE_HPP_
#define REDP_FEATURIZE_HPP_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "redp/corpus.hpp"

namespace redp::feat {

enum class ActionFeatMode { kSingleLabel, kTokenBag };

std::string_view mode_name(ActionFeatMode mode);
ActionFeatMode parse_mode(std::string_view name);

// Splits on '_' only.
std::vector<std::string> tokens_of(std::string_view name);

// Feature space fixed by a DomainSpec. Token lists are sorted.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(const corpus::DomainSpec& spec, ActionFeatMode mode);

  const std::vector<std::string>& user_tokens() const { return user_tokens_; }
  const std::vector<std::string>& action_tokens() const { return action_tokens_; }
  const std::vector<std::string>& slot_names() const { return slot_names_; }
  // Ranking candidates, in domain order.
  const std::vector<std::string>& action_names() const { return action_names_; }
  ActionFeatMode mode() const { return mode_; }

  int user_index(std::string_view token) const;
  int action_token_index(std::string_view token) const;
  int slot_index(std::string_view slot) const;
  int action_index(std::string_view action) const;

 private:
  ActionFeatMode mode_ = ActionFeatMode::kTokenBag;
  std::vector<std::string> user_tokens_;
  std::vector<std::string> action_tokens_;
  std::vector<std::string> slot_names_;
  std::vector<std::string> action_names_;
  std::map<std::string, int, std::less<>> user_index_;
  std::map<std::string, int, std::less<>> action_token_index_;
  std::map<std::string, int, std::less<>> slot_index_;
  std::map<std::string, int, std::less<>> action_index_;
};

Vocabulary build_vocabulary(const corpus::DomainSpec& spec, ActionFeatMode mode);

// Intent tokens plus one count per present entity name. Entity values are
// not featurized.
std::vector<double> featurize_user(const corpus::UserTurn& turn, const Vocabulary& vocab);

std::vector<double> featurize_action(std::string_view name, const Vocabulary& vocab);

// Action feature matrix, one row per vocab.action_names() entry.
std::vector<double> action_feature_table(const Vocabulary& vocab);

// One binary vector per user step, indexed like spec.slots. A slot turns on at
// the first user step mentioning its entity and stays on.
std::vector<std::vector<double>> track_slots(const corpus::Dialogue& d,
                                             const corpus::DomainSpec& spec);

// Latest value per slot, overwritten on each mention.
std::map<std::string, std::string> slot_values(const corpus::Dialogue& d);

struct TurnFeatures {
  std::vector<double> user_vec;
  std::vector<double> slot_vec;
  std::string target_action;
  int target_index = -1;
  // Index of the preceding action step, -1 at the first action.
  int prev_action_index = -1;
};

// One entry per action step of a listen-expanded dialogue.
std::vector<TurnFeatures> featurize_dialogue(const corpus::Dialogue& d,
                                             const Vocabulary& vocab);

}  // namespace redp::feat

#endif  // REDP_FEATURIZE_HPP_
