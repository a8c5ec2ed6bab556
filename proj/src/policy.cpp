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

#include "redp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "redp/ad/optim.hpp"
#include "redp/error.hpp"

namespace redp::policy {

using corpus::ActionStep;
using corpus::UserTurn;

int argmax_tiebreak(const std::vector<double>& scores, const std::vector<std::string>& names) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (best < 0 || scores[i] > scores[best] ||
        (scores[i] == scores[best] && names[i] < names[best])) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<feat::TurnFeatures> featurize_prefix(const corpus::Dialogue& prefix,
                                                 const feat::Vocabulary& vocab) {
  if (prefix.steps.empty() || !corpus::is_user(prefix.steps.front())) {
    throw Error(ErrorKind::kMalformedDocument, "a prefix must start with a user turn");
  }
  std::vector<feat::TurnFeatures> steps = feat::featurize_dialogue(prefix, vocab);
  feat::TurnFeatures query;
  query.user_vec.assign(vocab.user_tokens().size(), 0.0);
  query.slot_vec.assign(vocab.slot_names().size(), 0.0);
  for (const auto& step : prefix.steps) {
    if (const auto* user = std::get_if<UserTurn>(&step)) {
      query.user_vec = feat::featurize_user(*user, vocab);
      for (const auto& [entity, value] : user->entities) {
        int idx = vocab.slot_index(entity);
        if (idx >= 0) query.slot_vec[idx] = 1.0;
      }
    }
  }
  query.prev_action_index = steps.empty() ? -1 : steps.back().target_index;
  query.target_index = -1;
  steps.push_back(std::move(query));
  return steps;
}

Prediction predict(const Policy& policy, const corpus::Dialogue& prefix) {
  corpus::validate_dialogue(prefix, policy.domain());
  Prediction out;
  out.steps = policy.run(featurize_prefix(prefix, policy.vocab()));
  const StepResult& last = out.steps.back();
  const auto& names = policy.vocab().action_names();
  out.action = names[last.predicted];
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (last.scores[a] != last.scores[b]) return last.scores[a] > last.scores[b];
    return names[a] < names[b];
  });
  for (std::size_t i : order) out.ranking.emplace_back(names[i], last.scores[i]);
  return out;
}

Accuracy training_accuracy(const Policy& policy,
                           const std::vector<std::vector<feat::TurnFeatures>>& encoded) {
  Accuracy acc;
  for (const auto& steps : encoded) {
    auto results = policy.run(steps);
    bool all = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      bool ok = results[i].predicted == steps[i].target_index;
      acc.correct_actions += ok ? 1 : 0;
      all = all && ok;
    }
    acc.actions += steps.size();
    acc.dialogues += 1;
    acc.fully_correct += all ? 1 : 0;
  }
  return acc;
}

TrainingLog fit(Policy& policy, const std::vector<corpus::Dialogue>& dialogues,
                const TrainOptions& options) {
  if (dialogues.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no training dialogues");
  std::vector<std::vector<feat::TurnFeatures>> encoded;
  encoded.reserve(dialogues.size());
  std::size_t total_steps = 0;
  for (const auto& d : dialogues) {
    encoded.push_back(feat::featurize_dialogue(d, policy.vocab()));
    total_steps += encoded.back().size();
  }
  if (total_steps == 0) throw Error(ErrorKind::kEmptyTrainingSet, "no action steps to learn");

  ad::ParameterStore& params = policy.params();
  ad::AdamState adam = ad::make_adam(params, options.learning_rate);
  Rng rng(options.seed);
  Rng dropout_rng = rng.fork(1);
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, options.batch_size));

  TrainingLog log;
  ad::Tape tape;
  int streak = 0;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      std::size_t batch_steps = 0;
      for (std::size_t i = start; i < stop; ++i) batch_steps += encoded[order[i]].size();
      if (batch_steps == 0) continue;
      params.zero_grad();
      const double weight = 1.0 / static_cast<double>(batch_steps);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        tape.clear();
        ad::Var loss = policy.build_loss(tape, encoded[order[i]], weight, true, dropout_rng);
        batch_loss += tape.item(loss);
        tape.backward(loss);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kNumericFailure,
                    "non-finite training loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(batch_steps);
      ad::adam_step(params, adam);
    }

    Accuracy acc = training_accuracy(policy, encoded);
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = epoch_loss / static_cast<double>(total_steps);
    entry.action_accuracy =
        static_cast<double>(acc.correct_actions) / static_cast<double>(acc.actions);
    entry.sequence_accuracy =
        static_cast<double>(acc.fully_correct) / static_cast<double>(acc.dialogues);
    log.epochs.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);

    if (acc.fully_correct == acc.dialogues) {
      ++streak;
    } else {
      streak = 0;
    }
    if (options.patience > 0 && streak >= options.patience) break;
  }
  log.reached_full_accuracy = streak > 0;
  return log;
}

}  // namespace redp::policy
