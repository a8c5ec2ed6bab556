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

#ifndef REDP_POLICY_HPP_
#define REDP_POLICY_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "redp/ad/tape.hpp"
#include "redp/ad/tensor.hpp"
#include "redp/corpus.hpp"
#include "redp/featurize.hpp"
#include "redp/rng.hpp"

namespace redp::policy {

// Scores for every ranking candidate at one teacher-forced step, plus
// whatever alignment information the policy exposes.
struct StepResult {
  std::vector<double> scores;
  int predicted = -1;
  std::vector<double> user_alignment;
  std::vector<double> system_alignment;
};

// Common surface of the embedding policy and the classifier baselines, used
// by the shared trainer and the evaluation harness.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string kind() const = 0;
  virtual const corpus::DomainSpec& domain() const = 0;
  virtual const feat::Vocabulary& vocab() const = 0;
  virtual ad::ParameterStore& params() = 0;
  virtual const ad::ParameterStore& params() const = 0;
  virtual nlohmann::json config_json() const = 0;

  // Sum of per-step losses times `weight`, as a scalar on `tape`.
  virtual ad::Var build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                             double weight, bool train, Rng& rng) = 0;

  // Teacher-forced inference over all steps. Steps whose target_index is -1
  // are scored but never fed back into memory. Thread-safe.
  virtual std::vector<StepResult> run(const std::vector<feat::TurnFeatures>& steps) const = 0;
};

// Highest score; ties go to the lexicographically smallest action name.
int argmax_tiebreak(const std::vector<double>& scores, const std::vector<std::string>& names);

struct Prediction {
  std::string action;
  // (action, score), best first.
  std::vector<std::pair<std::string, double>> ranking;
  // One entry per featurized step of the prefix, the query step last.
  std::vector<StepResult> steps;
};

// Features for every action already in `prefix` plus one query step for the
// next action. Throws UnknownIdentifier / MalformedDocument.
std::vector<feat::TurnFeatures> featurize_prefix(const corpus::Dialogue& prefix,
                                                 const feat::Vocabulary& vocab);

Prediction predict(const Policy& policy, const corpus::Dialogue& prefix);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double action_accuracy = 0.0;
  double sequence_accuracy = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  bool reached_full_accuracy = false;
};

struct TrainOptions {
  int epochs = 400;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Stop once training accuracy has been 100% for this many consecutive
  // epochs; 0 disables early stopping.
  int patience = 10;
  std::function<void(const EpochLog&)> on_epoch;
};

// Minimises the mean per-step loss over all dialogues with Adam on seeded
// minibatches of whole dialogues. Throws EmptyTrainingSet, NumericFailure.
TrainingLog fit(Policy& policy, const std::vector<corpus::Dialogue>& dialogues,
                const TrainOptions& options);

struct Accuracy {
  std::size_t dialogues = 0;
  std::size_t fully_correct = 0;
  std::size_t actions = 0;
  std::size_t correct_actions = 0;
};

Accuracy training_accuracy(const Policy& policy,
                           const std::vector<std::vector<feat::TurnFeatures>>& encoded);

}  // namespace redp::policy

#endif  // REDP_POLICY_HPP_
