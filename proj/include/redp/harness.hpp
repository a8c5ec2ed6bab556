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

#ifndef REDP_HARNESS_HPP_
#define REDP_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "redp/baseline.hpp"
#include "redp/corpus.hpp"
#include "redp/policy.hpp"
#include "redp/redp.hpp"
#include "redp/simuser.hpp"

namespace redp::harness {

struct ActionTally {
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct EvalReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t n_dialogues = 0;
  std::size_t n_fully_correct = 0;
  std::size_t n_actions = 0;
  std::size_t n_correct_actions = 0;
  std::map<std::string, ActionTally> per_action;
  // Index of the first wrong action step per dialogue, -1 when all correct.
  std::vector<int> first_error;

  // False for an empty test set.
  bool defined() const { return n_dialogues > 0; }
  double accuracy() const;
  nlohmann::json to_json() const;
};

// Teacher-forced by default: the ground-truth history is fed forward and a
// dialogue counts only if every action is predicted. free_running feeds the
// policy's own predictions back instead. Throws DomainMismatch.
EvalReport eval_accuracy(const policy::Policy& policy,
                         const std::vector<corpus::Dialogue>& test,
                         bool free_running = false);

enum class PolicyKind { kRedp, kLstmBin, kLstmLt };

std::string_view kind_name(PolicyKind kind);
// Throws SchemaViolation.
PolicyKind parse_kind(std::string_view name);

// Configurations for every policy kind; the seed is set per run.
struct PolicyConfigs {
  model::RedpConfig redp;
  baseline::BaselineConfig lstm;
};

std::unique_ptr<policy::Policy> make_policy(PolicyKind kind, const corpus::DomainSpec& spec,
                                            const PolicyConfigs& configs, std::uint64_t seed);

// Trains with the epochs, batch size, learning rate, seed and patience held
// in the policy's own configuration.
policy::TrainingLog train_policy(policy::Policy& policy,
                                 const std::vector<corpus::Dialogue>& dialogues,
                                 std::function<void(const policy::EpochLog&)> on_epoch = {});

// Saves any policy kind; load_policy restores it. Throws IoFailure,
// SchemaViolation.
ad::Checkpoint policy_checkpoint(const policy::Policy& policy);
std::unique_ptr<policy::Policy> policy_from_checkpoint(const ad::Checkpoint& ckpt);

// Corpora of the generalization and transfer experiments.
struct ExperimentData {
  corpus::DomainSpec hotel_domain;
  corpus::DomainSpec merged_domain;
  std::vector<corpus::Dialogue> cooperative_hotel;
  std::vector<corpus::Dialogue> hotel_train;  // uncooperative, 78
  std::vector<corpus::Dialogue> hotel_test;   // uncooperative, 30
  std::vector<corpus::Dialogue> cooperative_restaurant;
  std::vector<corpus::Dialogue> uncooperative_restaurant;
};

struct ExperimentOptions {
  std::size_t generate = 120;
  std::size_t keep = 108;
  std::size_t n_test = 30;
  int max_user_turns = 12;
  std::uint64_t seed = 7;
};

// Generates the uncooperative hotel dialogues, deduplicates, keeps the first
// `keep`, and splits off the test set.
ExperimentData build_experiment_data(const sim::BundledCorpora& bundle,
                                     const ExperimentOptions& options);

enum class Variant { kD1, kD2 };
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

const corpus::DomainSpec& variant_domain(const ExperimentData& data, Variant v);

// Training set for `variant` with the first `n_uncooperative` dialogues of a
// seeded permutation of hotel_train (kept in corpus order).
std::vector<corpus::Dialogue> training_set(const ExperimentData& data, Variant v,
                                           std::size_t n_uncooperative, std::uint64_t seed);

inline const std::vector<std::size_t> kDefaultFractions = {0, 13, 26, 39, 52, 65, 78};

struct CurvePoint {
  std::size_t fraction = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t runs = 0;
  std::vector<double> accuracies;

  nlohmann::json to_json() const;
};

struct CurveOptions {
  PolicyKind kind = PolicyKind::kRedp;
  Variant variant = Variant::kD1;
  std::vector<std::size_t> fractions = kDefaultFractions;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  // Worker threads; 0 = hardware concurrency.
  unsigned jobs = 0;
  PolicyConfigs configs;
  // Called after each finished run, possibly from a worker thread.
  std::function<void(std::size_t fraction, std::size_t run, double accuracy)> on_run;
};

// Run r of every fraction trains with seed + r and subsamples with a seed
// derived from (seed, r). Throws InvalidFraction.
std::vector<CurvePoint> learning_curve(const ExperimentData& data, const CurveOptions& options);

struct AblationArm {
  std::string name;
  bool use_user_attention = true;
  bool use_system_attention = true;
  bool use_history_rewrite = true;
};

// full, system_attention (user off), user_attention (system off),
// no_attention (both off).
std::vector<AblationArm> default_arms();

struct AblationRow {
  AblationArm arm;
  std::vector<CurvePoint> curve;
};

// REDP curves on d1 for each arm; options.kind and variant are ignored.
std::vector<AblationRow> ablation(const ExperimentData& data, const std::vector<AblationArm>& arms,
                                  CurveOptions options);

// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct AttentionRecord {
  std::size_t step = 0;
  std::string action;
  std::string target;
  std::vector<double> user_alignments;
  std::vector<double> system_alignments;
};

inline constexpr int kAttentionSchemaVersion = 1;

// Teacher-forced trace of every action step. Throws MalformedDocument for a
// dialogue without action steps.
std::vector<AttentionRecord> attention_trace(const model::RedpPolicy& policy,
                                             const corpus::Dialogue& dialogue);

// {"schema": "redp-attention", "schema_version": 1, "dialogue": ...,
//  "records": [{"step", "action", "target", "user_alignments",
//               "system_alignments"}, ...]}. Throws IoFailure.
void export_attention(const std::vector<AttentionRecord>& records, const std::string& dialogue,
                      const std::filesystem::path& path);
std::string attention_json(const std::vector<AttentionRecord>& records,
                           const std::string& dialogue);

// Plain-text table of curve points, one row per fraction.
std::string format_curve(const std::string& title, const std::vector<CurvePoint>& curve);

}  // namespace redp::harness

#endif  // REDP_HARNESS_HPP_
