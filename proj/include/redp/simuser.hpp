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

#ifndef REDP_SIMUSER_HPP_
#define REDP_SIMUSER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "redp/corpus.hpp"
#include "redp/rng.hpp"

namespace redp::sim {

// Slot-filling task. Slots are asked for in list order.
struct TaskSpec {
  std::string domain;
  std::vector<std::string> slots;

  std::string search_action() const { return "action_search_" + domain; }
  std::string ask_action(std::string_view slot) const;
  std::string explain_action(std::string_view slot) const;
  std::string details_action() const { return "utter_explain_details_" + domain; }
};

TaskSpec hotel_task();
TaskSpec restaurant_task();
// Throws SchemaViolation for anything but "hotel" / "restaurant".
TaskSpec task_by_name(std::string_view domain);

inline constexpr std::string_view kGreet = "greet";
inline constexpr std::string_view kInform = "inform";
inline constexpr std::string_view kCorrect = "correct";
inline constexpr std::string_view kChitchat = "chitchat";
inline constexpr std::string_view kAskWhy = "ask_why";          // narrow context
inline constexpr std::string_view kAskResults = "ask_results";  // broad context

inline constexpr std::string_view kUtterGreet = "utter_greet";
inline constexpr std::string_view kAckCorrection = "utter_ack_correction";
inline constexpr std::string_view kChitchatAction = "action_chitchat";
inline constexpr std::string_view kNotEnoughInfo = "utter_not_enough_info";

corpus::DomainSpec task_domain(const TaskSpec& task);

enum class DeviationType { kCooperate, kChitchat, kCorrection, kBroadContext, kNarrowContext };

inline constexpr int kDeviationTypeCount = 5;
std::string_view deviation_name(DeviationType type);
// Deviation a user turn expresses; greet counts as cooperative.
DeviationType classify_turn(const corpus::UserTurn& turn);

// slot -> candidate values
using ValueTable = std::map<std::string, std::vector<std::string>>;

// Reads values.json from a bundle directory. Throws IoFailure /
// MalformedDocument / SchemaViolation.
ValueTable load_values(const std::filesystem::path& dir);

struct SimState {
  std::map<std::string, std::string> filled;
  // First slot still missing, if any.
  std::optional<std::string> pending;
  int user_turns = 0;
  int deviations = 0;
  int deviation_budget = 0;
  bool done = false;
};

SimState initial_state(const TaskSpec& task, int deviation_budget);

// System response to `turn` given the state before it; runs end with
// action_listen except the terminal search. Throws InconsistentState.
std::vector<std::string> oracle_action(const SimState& state, const corpus::UserTurn& turn,
                                       const TaskSpec& task);

// State after `turn` (slot fills, pending slot, counters, termination).
void advance(SimState& state, const corpus::UserTurn& turn, const TaskSpec& task);

// Each of the five response types with probability 1/5. Correction falls
// back to cooperation while no slot is filled.
std::pair<corpus::UserTurn, DeviationType> sample_user_turn(const SimState& state,
                                                            const TaskSpec& task,
                                                            const ValueTable& values, Rng& rng);

// Dialogues opened with a greeting and simulated until the search action.
// Deviations are limited to max_user_turns - (|slots| + 1), so every dialogue
// completes within the cap, and at least one deviation occurs when the
// budget allows. Output is listen-expanded and deduplicated.
std::vector<corpus::Dialogue> generate_dialogues(const TaskSpec& task, std::size_t n,
                                                 int max_user_turns, std::uint64_t seed,
                                                 const ValueTable& values);

// Generated until `n` unique dialogues exist.
std::vector<corpus::Dialogue> generate_unique(const TaskSpec& task, std::size_t n,
                                              int max_user_turns, std::uint64_t seed,
                                              const ValueTable& values);

// Chooses the next action from `propose` and replaces it by the oracle's
// label whenever they differ, mirroring a generate-then-fix pipeline.
// Returns the labeled dialogues and how many labels were fixed.
using ActionProposer =
    std::function<std::string(const corpus::Dialogue& prefix)>;
std::pair<std::vector<corpus::Dialogue>, std::size_t> generate_bootstrapped(
    const TaskSpec& task, std::size_t n, int max_user_turns, std::uint64_t seed,
    const ValueTable& values, const ActionProposer& propose);

// Relabels a dialogue's user turns with the oracle.
corpus::Dialogue replay_labels(const corpus::Dialogue& d, const TaskSpec& task);

// Cooperative dialogues. Each plan lists how many slots every inform turn
// fills, optionally after a greeting.
struct CooperativePlan {
  bool greet = true;
  std::vector<int> chunks;
};
std::vector<CooperativePlan> cooperative_plans(const TaskSpec& task);
std::vector<corpus::Dialogue> cooperative_dialogues(const TaskSpec& task,
                                                    const ValueTable& values,
                                                    std::uint64_t seed);

// One dialogue per (deviation type, position), each with exactly one
// deviation.
std::vector<corpus::Dialogue> single_deviation_dialogues(const TaskSpec& task,
                                                         const ValueTable& values,
                                                         std::uint64_t seed);

struct BundledCorpora {
  corpus::DomainSpec hotel_domain;
  corpus::DomainSpec restaurant_domain;
  ValueTable values;
  std::vector<corpus::Dialogue> cooperative_hotel;
  std::vector<corpus::Dialogue> cooperative_restaurant;
  std::vector<corpus::Dialogue> uncooperative_seed_hotel;
  std::vector<corpus::Dialogue> uncooperative_seed_restaurant;
};

std::filesystem::path default_bundle_dir();

// Loads the bundle after verifying every MANIFEST checksum. Throws
// CorruptBundle, IoFailure.
BundledCorpora handcrafted_corpora(const std::filesystem::path& dir = default_bundle_dir());

// Writes domains, corpora and MANIFEST next to an existing values.json.
// Returns the written file names.
std::vector<std::string> write_bundle(const std::filesystem::path& dir, std::uint64_t seed);

inline constexpr std::string_view kBundleManifest = "MANIFEST";

}  // namespace redp::sim

#endif  // REDP_SIMUSER_HPP_
