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

#ifndef REDP_REDP_HPP_
#define REDP_REDP_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "redp/ad/checkpoint.hpp"
#include "redp/ad/tape.hpp"
#include "redp/corpus.hpp"
#include "redp/featurize.hpp"
#include "redp/nn.hpp"
#include "redp/policy.hpp"

// Recurrent embedding dialogue policy: dialogue state and system actions are
// embedded in one space and actions are ranked by cosine similarity.

namespace redp::model {

// Which recurrent state the history rewrite replaces.
enum class RewriteTarget { kCell, kHidden, kBoth };

std::string_view rewrite_target_name(RewriteTarget target);
// Throws SchemaViolation.
RewriteTarget parse_rewrite_target(std::string_view name);

struct RedpConfig {
  int embed_dim = 20;
  int rnn_units = 32;
  int attention_key_dim = 32;
  // Positive similarities are pushed up to mu_pos; the largest negative
  // similarity is pushed down to mu_neg.
  double mu_pos = 0.8;
  double mu_neg = 0.2;
  double recurrent_dropout = 0.1;
  int epochs = 400;
  int batch_size = 8;
  double learning_rate = 1e-3;
  int patience = 10;
  std::uint64_t seed = 0;
  bool use_user_attention = true;
  bool use_system_attention = true;
  bool use_history_rewrite = true;
  RewriteTarget rewrite_target = RewriteTarget::kCell;
  int t_max = 48;
  feat::ActionFeatMode action_feat_mode = feat::ActionFeatMode::kTokenBag;

  // Throws SchemaViolation.
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static RedpConfig from_json(const nlohmann::json& doc);
};

// Hinge ranking loss for one step:
//   max(mu_pos - sim_pos, 0) + max(max(sims_neg) - mu_neg, 0)
// Throws EmptyNegatives.
double loss_step(double sim_pos, std::span<const double> sims_neg, double mu_pos,
                 double mu_neg);

// b_i = 1 when p_i >= 1/m (up to rounding); at least one bit is always set.
std::vector<std::uint8_t> binarize_attention(std::span<const double> probs);

// Mean of the states selected by binarize_attention(probs); falls back to
// the last state if nothing is selected.
std::vector<double> history_rewrite(const std::vector<std::vector<double>>& states,
                                    std::span<const double> probs);
ad::Var history_rewrite(ad::Tape& tape, std::span<const ad::Var> states,
                        std::span<const double> probs);

// Parameter indices of one location-and-content attention head.
struct AttentionHead {
  std::size_t query_w = 0;   // (control, key)
  std::size_t memory_w = 0;  // (embed, key)
  std::size_t score_v = 0;   // (key), weight-normalised
  std::size_t score_g = 0;   // (1)
  std::size_t score_b = 0;   // (key)
  std::size_t gate_w = 0;    // (control, 1)
  std::size_t gate_b = 0;    // (1)
  std::size_t shift_w = 0;   // (control, 3)
  std::size_t shift_b = 0;   // (3)
};

AttentionHead add_attention_head(ad::ParameterStore& params, const std::string& prefix,
                                 std::size_t control_dim, std::size_t embed_dim,
                                 std::size_t key_dim, Rng& rng);

struct AttentionRead {
  ad::Var probs;
  ad::Var read;
  ad::Var scores;
};

// Attention over memory rows 1..m:
//  1. additive scores e_i = g * v/|v| . tanh(K_i + W_q control + b)
//  2. interpolation with the previous step's scores, rows < m only:
//     g e_i + (1-g) prev_i, with g = sigmoid(W_g control + b_g)
//  3. softmax
//  4. shift by convolving with softmax(W_s control + b_s) over {-1, 0, +1},
//     then renormalise
//  5. read = sum_i p_i memory_i
// `keys` are memory rows already multiplied by memory_w. Throws EmptyMemory.
AttentionRead attention_read(ad::Tape& tape, ad::ParameterStore& params,
                             const AttentionHead& head, ad::Var control,
                             std::span<const ad::Var> memory, std::span<const ad::Var> keys,
                             std::optional<ad::Var> prev_scores);

struct Memory {
  std::vector<ad::Var> rows;
  std::vector<ad::Var> keys;
  std::optional<ad::Var> prev_scores;
};

// Per-dialogue recurrent state. Memories only ever hold steps up to the
// current one; cells[k] / hiddens[k] are the LSTM state after step k + 1.
struct AttentionState {
  Memory user;
  Memory system;
  std::vector<ad::Var> cells;
  std::vector<ad::Var> hiddens;
  ad::Var initial_hidden;
  ad::Var initial_cell;
  ad::Var action_table;
  // Variational mask shared by every step of the dialogue; empty = no dropout.
  std::vector<double> dropout_mask;
  std::size_t step = 0;
};

struct StepOutput {
  ad::Var dialogue_embedding;
  ad::Var similarities;
  std::vector<double> user_alignment;
  std::vector<double> system_alignment;
};

enum class EmbedLayer { kUser, kSlots, kAction, kRnnOutput };

class RedpPolicy : public policy::Policy {
 public:
  RedpPolicy(corpus::DomainSpec spec, RedpConfig config);

  std::string kind() const override { return "redp"; }
  const corpus::DomainSpec& domain() const override { return spec_; }
  const feat::Vocabulary& vocab() const override { return vocab_; }
  ad::ParameterStore& params() override { return params_; }
  const ad::ParameterStore& params() const override { return params_; }
  nlohmann::json config_json() const override { return config_.to_json(); }
  const RedpConfig& config() const { return config_; }

  ad::Var build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                     double weight, bool train, Rng& rng) override;
  std::vector<policy::StepResult> run(
      const std::vector<feat::TurnFeatures>& steps) const override;

  // Affine embedding of a feature vector (rank 1) or rows (rank 2).
  ad::Var embed(ad::Tape& tape, EmbedLayer layer, ad::Var features);
  std::vector<double> embed(EmbedLayer layer, std::span<const double> features) const;

  // (|actions|, embed_dim) embeddings of every ranking candidate.
  ad::Var action_table(ad::Tape& tape);

  AttentionState begin_dialogue(ad::Tape& tape, bool train, Rng& rng);

  // One teacher-forced step. target_index >= 0 appends that action to the
  // system memory after scoring. Throws StateMismatch.
  StepOutput forward_step(ad::Tape& tape, const feat::TurnFeatures& features,
                          AttentionState& state, bool train, Rng& rng);

  ad::Checkpoint to_checkpoint() const;
  static RedpPolicy from_checkpoint(const ad::Checkpoint& ckpt);

 private:
  ad::Var step_loss(ad::Tape& tape, ad::Var sims, int target);

  corpus::DomainSpec spec_;
  RedpConfig config_;
  feat::Vocabulary vocab_;
  std::vector<double> action_features_;
  ad::ParameterStore params_;
  nn::Dense user_embed_, slot_embed_, action_embed_, output_embed_;
  nn::LstmCell lstm_;
  std::size_t initial_hidden_ = 0;
  AttentionHead user_head_, system_head_;
};

// Trains with the configuration's epochs, batch size, learning rate, seed
// and early-stopping patience.
// Throws EmptyTrainingSet, NumericFailure.
policy::TrainingLog train(RedpPolicy& model, const std::vector<corpus::Dialogue>& dialogues,
                          std::function<void(const policy::EpochLog&)> on_epoch = {});

}  // namespace redp::model

#endif  // REDP_REDP_HPP_
