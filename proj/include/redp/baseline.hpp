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

#ifndef REDP_BASELINE_HPP_
#define REDP_BASELINE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "redp/ad/checkpoint.hpp"
#include "redp/nn.hpp"
#include "redp/policy.hpp"

// LSTM action classifiers over a binary input of user features, slots and
// the previous action.

namespace redp::baseline {

// bin: previous action one-hot. lt: previous action as a bag of name tokens.
enum class PrevActionEncoding { kBin, kLt };

std::string_view encoding_name(PrevActionEncoding e);
PrevActionEncoding parse_encoding(std::string_view name);

struct BaselineConfig {
  int input_dim = 32;
  int rnn_units = 32;
  double recurrent_dropout = 0.1;
  int epochs = 400;
  int batch_size = 8;
  double learning_rate = 1e-3;
  int patience = 10;
  std::uint64_t seed = 0;
  PrevActionEncoding prev_action_encoding = PrevActionEncoding::kBin;

  void validate() const;
  nlohmann::json to_json() const;
  static BaselineConfig from_json(const nlohmann::json& doc);
};

// [user tokens clipped to {0,1} | slot bits | previous action code]; the
// code is all zeros when prev_action_index < 0.
std::vector<double> featurize_input(const feat::TurnFeatures& features,
                                    const feat::Vocabulary& vocab);

class LstmPolicy : public policy::Policy {
 public:
  LstmPolicy(corpus::DomainSpec spec, BaselineConfig config);

  std::string kind() const override;
  const corpus::DomainSpec& domain() const override { return spec_; }
  const feat::Vocabulary& vocab() const override { return vocab_; }
  ad::ParameterStore& params() override { return params_; }
  const ad::ParameterStore& params() const override { return params_; }
  nlohmann::json config_json() const override { return config_.to_json(); }
  const BaselineConfig& config() const { return config_; }

  std::size_t input_size() const { return input_size_; }

  // Per-step cross-entropy, summed and scaled by `weight`.
  ad::Var build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                     double weight, bool train, Rng& rng) override;
  // Scores are softmax probabilities.
  std::vector<policy::StepResult> run(
      const std::vector<feat::TurnFeatures>& steps) const override;

  ad::Checkpoint to_checkpoint() const;
  static LstmPolicy from_checkpoint(const ad::Checkpoint& ckpt);

 private:
  // Logits for every step.
  std::vector<ad::Var> forward(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                               bool train, Rng& rng);

  corpus::DomainSpec spec_;
  BaselineConfig config_;
  feat::Vocabulary vocab_;
  std::size_t input_size_ = 0;
  ad::ParameterStore params_;
  nn::Dense input_proj_, output_;
  nn::LstmCell lstm_;
};

policy::TrainingLog train(LstmPolicy& model, const std::vector<corpus::Dialogue>& dialogues,
                          std::function<void(const policy::EpochLog&)> on_epoch = {});

}  // namespace redp::baseline

#endif  // REDP_BASELINE_HPP_
