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

#include "redp/redp.hpp"

#include <algorithm>
#include <cmath>

#include "redp/error.hpp"

namespace redp::model {

using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string_view rewrite_target_name(RewriteTarget target) {
  switch (target) {
    case RewriteTarget::kCell: return "cell";
    case RewriteTarget::kHidden: return "hidden";
    case RewriteTarget::kBoth: return "both";
  }
  return "?";
}

RewriteTarget parse_rewrite_target(std::string_view name) {
  if (name == "cell") return RewriteTarget::kCell;
  if (name == "hidden") return RewriteTarget::kHidden;
  if (name == "both") return RewriteTarget::kBoth;
  throw Error(ErrorKind::kSchemaViolation,
              "unknown rewrite target '" + std::string(name) + "' (cell, hidden, both)");
}

void RedpConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kSchemaViolation, msg); };
  if (embed_dim < 1 || rnn_units < 1 || attention_key_dim < 1) fail("dimensions must be >= 1");
  if (!(mu_pos > 0.0 && mu_pos <= 1.0)) fail("mu_pos must lie in (0, 1]");
  if (!(mu_neg >= 0.0 && mu_neg < 1.0)) fail("mu_neg must lie in [0, 1)");
  if (!(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0)) {
    fail("recurrent_dropout must lie in [0, 1)");
  }
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (patience < 0) fail("patience must be >= 0");
  if (t_max < 2) fail("t_max must be >= 2");
}

json RedpConfig::to_json() const {
  return json{{"embed_dim", embed_dim},
              {"rnn_units", rnn_units},
              {"attention_key_dim", attention_key_dim},
              {"mu_pos", mu_pos},
              {"mu_neg", mu_neg},
              {"recurrent_dropout", recurrent_dropout},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"patience", patience},
              {"seed", seed},
              {"use_user_attention", use_user_attention},
              {"use_system_attention", use_system_attention},
              {"use_history_rewrite", use_history_rewrite},
              {"rewrite_target", std::string(rewrite_target_name(rewrite_target))},
              {"t_max", t_max},
              {"action_feat_mode", std::string(feat::mode_name(action_feat_mode))}};
}

RedpConfig RedpConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kSchemaViolation, "config must be an object");
  RedpConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "embed_dim") c.embed_dim = value.get<int>();
      else if (key == "rnn_units") c.rnn_units = value.get<int>();
      else if (key == "attention_key_dim") c.attention_key_dim = value.get<int>();
      else if (key == "mu_pos") c.mu_pos = value.get<double>();
      else if (key == "mu_neg") c.mu_neg = value.get<double>();
      else if (key == "recurrent_dropout") c.recurrent_dropout = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "patience") c.patience = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "use_user_attention") c.use_user_attention = value.get<bool>();
      else if (key == "use_system_attention") c.use_system_attention = value.get<bool>();
      else if (key == "use_history_rewrite") c.use_history_rewrite = value.get<bool>();
      else if (key == "rewrite_target") {
        c.rewrite_target = parse_rewrite_target(value.get<std::string>());
      } else if (key == "t_max") c.t_max = value.get<int>();
      else if (key == "action_feat_mode") {
        c.action_feat_mode = feat::parse_mode(value.get<std::string>());
      } else {
        throw Error(ErrorKind::kSchemaViolation, "unknown config key: " + key);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

double loss_step(double sim_pos, std::span<const double> sims_neg, double mu_pos,
                 double mu_neg) {
  if (sims_neg.empty()) throw Error(ErrorKind::kEmptyNegatives, "no negative actions");
  double max_neg = *std::max_element(sims_neg.begin(), sims_neg.end());
  return std::max(mu_pos - sim_pos, 0.0) + std::max(max_neg - mu_neg, 0.0);
}

std::vector<std::uint8_t> binarize_attention(std::span<const double> probs) {
  std::vector<std::uint8_t> bits(probs.size(), 0);
  if (probs.empty()) return bits;
  const double threshold = 1.0 / static_cast<double>(probs.size()) - 1e-12;
  bool any = false;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bits[i] = probs[i] >= threshold ? 1 : 0;
    any = any || bits[i];
  }
  if (!any) bits.back() = 1;
  return bits;
}

namespace {

std::vector<double> rewrite_weights(std::span<const double> probs) {
  auto bits = binarize_attention(probs);
  double count = 0.0;
  for (auto b : bits) count += b;
  std::vector<double> w(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) w[i] = bits[i] / count;
  return w;
}

}  // namespace

std::vector<double> history_rewrite(const std::vector<std::vector<double>>& states,
                                    std::span<const double> probs) {
  if (states.empty() || states.size() != probs.size()) {
    throw Error(ErrorKind::kStateMismatch, "history_rewrite: states and probabilities differ");
  }
  auto w = rewrite_weights(probs);
  std::vector<double> out(states.front().size(), 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[i] * states[i][j];
  }
  return out;
}

Var history_rewrite(ad::Tape& tape, std::span<const Var> states, std::span<const double> probs) {
  if (states.empty() || states.size() != probs.size()) {
    throw Error(ErrorKind::kStateMismatch, "history_rewrite: states and probabilities differ");
  }
  if (states.size() == 1) return states.front();
  auto w = rewrite_weights(probs);
  return tape.matmul(tape.vector(w), tape.stack(states));
}

AttentionHead add_attention_head(ad::ParameterStore& params, const std::string& prefix,
                                 std::size_t control_dim, std::size_t embed_dim,
                                 std::size_t key_dim, Rng& rng) {
  AttentionHead h;
  h.query_w = params.add(prefix + "/query_w",
                         Tensor::matrix(control_dim, key_dim,
                                        nn::glorot_uniform(control_dim, key_dim, rng)));
  h.memory_w = params.add(prefix + "/memory_w",
                          Tensor::matrix(embed_dim, key_dim,
                                         nn::glorot_uniform(embed_dim, key_dim, rng)));
  h.score_v = params.add(prefix + "/score_v", Tensor::vector(nn::glorot_uniform(key_dim, 1, rng)));
  h.score_g = params.add(prefix + "/score_g",
                         Tensor::scalar(std::sqrt(1.0 / static_cast<double>(key_dim))));
  h.score_b = params.add(prefix + "/score_b", Tensor::zeros({key_dim}));
  h.gate_w = params.add(prefix + "/gate_w",
                        Tensor::matrix(control_dim, 1, nn::glorot_uniform(control_dim, 1, rng)));
  h.gate_b = params.add(prefix + "/gate_b", Tensor::zeros({1}));
  h.shift_w = params.add(prefix + "/shift_w",
                         Tensor::matrix(control_dim, 3, nn::glorot_uniform(control_dim, 3, rng)));
  h.shift_b = params.add(prefix + "/shift_b", Tensor::vector({0.0, 2.0, 0.0}));
  return h;
}

AttentionRead attention_read(ad::Tape& tape, ad::ParameterStore& params,
                             const AttentionHead& head, Var control,
                             std::span<const Var> memory, std::span<const Var> keys,
                             std::optional<Var> prev_scores) {
  const std::size_t m = memory.size();
  if (m == 0) throw Error(ErrorKind::kEmptyMemory, "attention over an empty memory");
  if (keys.size() != m) throw Error(ErrorKind::kStateMismatch, "memory and keys differ");

  Var query = tape.matmul(control, tape.param(params, head.query_w));
  query = tape.add(query, tape.param(params, head.score_b));
  Var hidden = tape.tanh(tape.add(tape.stack(keys), query));
  Var v = tape.l2_normalize(tape.param(params, head.score_v));
  Var scores = tape.scale(tape.param(params, head.score_g), tape.matmul(hidden, v));

  if (prev_scores && m > 1) {
    if (tape.shape(*prev_scores)[0] != m - 1) {
      throw Error(ErrorKind::kStateMismatch, "previous scores do not match memory length");
    }
    Var gate = tape.sigmoid(tape.add(tape.matmul(control, tape.param(params, head.gate_w)),
                                     tape.param(params, head.gate_b)));
    std::vector<double> last(m, 0.0), rest(m, 1.0);
    last[m - 1] = 1.0;
    rest[m - 1] = 0.0;
    Var parts[2] = {*prev_scores, tape.scalar(0.0)};
    Var prev = tape.concat(parts);
    Var keep = tape.sub(tape.scalar(1.0), gate);
    Var mixed = tape.add(tape.scale(gate, scores), tape.scale(keep, prev));
    scores = tape.add(tape.mul(scores, tape.vector(last)), tape.mul(mixed, tape.vector(rest)));
  }

  Var probs = tape.softmax(scores);
  Var kernel = tape.softmax(tape.add(tape.matmul(control, tape.param(params, head.shift_w)),
                                     tape.param(params, head.shift_b)));
  // softmax(log p) == p / sum(p)
  probs = tape.softmax(tape.log(tape.conv1d(probs, kernel)));
  Var read = tape.matmul(probs, tape.stack(memory));
  return {probs, read, scores};
}

RedpPolicy::RedpPolicy(corpus::DomainSpec spec, RedpConfig config)
    : spec_(std::move(spec)), config_(config) {
  config_.validate();
  corpus::validate_domain(spec_);
  vocab_ = feat::build_vocabulary(spec_, config_.action_feat_mode);
  if (vocab_.action_names().size() < 2) {
    throw Error(ErrorKind::kEmptyNegatives, "ranking needs at least two actions");
  }
  action_features_ = feat::action_feature_table(vocab_);

  Rng rng(config_.seed);
  const std::size_t de = config_.embed_dim;
  const std::size_t dh = config_.rnn_units;
  const std::size_t dk = config_.attention_key_dim;
  user_embed_ = nn::add_dense(params_, "user_embed", vocab_.user_tokens().size(), de, rng);
  slot_embed_ = nn::add_dense(params_, "slot_embed", std::max<std::size_t>(1, vocab_.slot_names().size()), de, rng);
  action_embed_ = nn::add_dense(params_, "action_embed", vocab_.action_tokens().size(), de, rng);
  output_embed_ = nn::add_dense(params_, "output_embed", dh, de, rng);
  nn::ChronoBiases chrono = nn::chrono_biases(dh, config_.t_max, rng);
  lstm_ = nn::add_lstm(params_, "lstm", 2 * de, dh, chrono, rng);
  initial_hidden_ = params_.add("lstm/h0", Tensor::zeros({dh}));
  user_head_ = add_attention_head(params_, "user_attention", de + dh, de, dk, rng);
  system_head_ = add_attention_head(params_, "system_attention", de + dh, de, dk, rng);
}

Var RedpPolicy::embed(ad::Tape& tape, EmbedLayer layer, Var features) {
  const nn::Dense* d = nullptr;
  switch (layer) {
    case EmbedLayer::kUser: d = &user_embed_; break;
    case EmbedLayer::kSlots: d = &slot_embed_; break;
    case EmbedLayer::kAction: d = &action_embed_; break;
    case EmbedLayer::kRnnOutput: d = &output_embed_; break;
  }
  auto shape = tape.shape(features);
  if (shape.back() != d->in) {
    throw Error(ErrorKind::kShapeMismatch, "embedding input has " + std::to_string(shape.back()) +
                                               " features, layer expects " + std::to_string(d->in));
  }
  return nn::apply_dense(tape, params_, *d, features);
}

std::vector<double> RedpPolicy::embed(EmbedLayer layer, std::span<const double> features) const {
  ad::Tape tape;
  auto* self = const_cast<RedpPolicy*>(this);
  Var out = self->embed(tape, layer, tape.vector(features));
  auto data = tape.data(out);
  return {data.begin(), data.end()};
}

Var RedpPolicy::action_table(ad::Tape& tape) {
  Var f = tape.constant(action_features_,
                        {vocab_.action_names().size(), vocab_.action_tokens().size()});
  return embed(tape, EmbedLayer::kAction, f);
}

AttentionState RedpPolicy::begin_dialogue(ad::Tape& tape, bool train, Rng& rng) {
  AttentionState s;
  s.initial_hidden = tape.param(params_, initial_hidden_);
  s.initial_cell = tape.constant(Tensor::zeros({static_cast<std::size_t>(config_.rnn_units)}));
  s.action_table = action_table(tape);
  if (train && config_.recurrent_dropout > 0.0) {
    const double keep = 1.0 - config_.recurrent_dropout;
    s.dropout_mask.resize(config_.rnn_units);
    for (auto& v : s.dropout_mask) v = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  return s;
}

namespace {

std::vector<double> to_vector(ad::Tape& tape, Var v) {
  auto d = tape.data(v);
  return {d.begin(), d.end()};
}

Var slots_or_zero(ad::Tape& tape, const std::vector<double>& slot_vec) {
  if (slot_vec.empty()) return tape.vector(std::vector<double>{0.0});
  return tape.vector(slot_vec);
}

}  // namespace

StepOutput RedpPolicy::forward_step(ad::Tape& tape, const feat::TurnFeatures& features,
                                    AttentionState& state, bool train, Rng& rng) {
  (void)rng;
  const std::size_t t = state.step + 1;
  if (state.user.rows.size() != t - 1 || state.system.rows.size() != t - 1 ||
      state.cells.size() != t - 1) {
    throw Error(ErrorKind::kStateMismatch, "attention state is not at step " + std::to_string(t));
  }
  if (features.user_vec.size() != vocab_.user_tokens().size() ||
      features.slot_vec.size() != vocab_.slot_names().size()) {
    throw Error(ErrorKind::kShapeMismatch, "turn features do not match the vocabulary");
  }
  const std::size_t de = config_.embed_dim;
  StepOutput out;

  Var user = embed(tape, EmbedLayer::kUser, tape.vector(features.user_vec));
  Var slots = embed(tape, EmbedLayer::kSlots, slots_or_zero(tape, features.slot_vec));
  state.user.rows.push_back(user);
  state.user.keys.push_back(tape.matmul(user, tape.param(params_, user_head_.memory_w)));

  Var h_prev = state.hiddens.empty() ? state.initial_hidden : state.hiddens.back();
  Var c_prev = state.cells.empty() ? state.initial_cell : state.cells.back();
  Var control_parts[2] = {user, h_prev};
  Var control = tape.concat(control_parts);

  Var user_read = tape.constant(Tensor::zeros({de}));
  if (config_.use_user_attention) {
    AttentionRead r = attention_read(tape, params_, user_head_, control, state.user.rows,
                                     state.user.keys, state.user.prev_scores);
    state.user.prev_scores = r.scores;
    user_read = r.read;
    out.user_alignment = to_vector(tape, r.probs);
  }

  Var system_read = tape.constant(Tensor::zeros({de}));
  if (config_.use_system_attention && !state.system.rows.empty()) {
    AttentionRead r = attention_read(tape, params_, system_head_, control, state.system.rows,
                                     state.system.keys, state.system.prev_scores);
    state.system.prev_scores = r.scores;
    system_read = r.read;
    out.system_alignment = to_vector(tape, r.probs);
    if (config_.use_history_rewrite) {
      if (config_.rewrite_target != RewriteTarget::kCell) {
        h_prev = history_rewrite(tape, state.hiddens, out.system_alignment);
      }
      if (config_.rewrite_target != RewriteTarget::kHidden) {
        c_prev = history_rewrite(tape, state.cells, out.system_alignment);
      }
    }
  }

  if (train && !state.dropout_mask.empty()) h_prev = tape.dropout_with_mask(h_prev, state.dropout_mask);

  Var input_parts[2] = {tape.add(user, user_read), slots};
  nn::LstmState next =
      nn::lstm_step(tape, params_, lstm_, tape.concat(input_parts), h_prev, c_prev);
  state.hiddens.push_back(next.hidden);
  state.cells.push_back(next.cell);

  out.dialogue_embedding =
      tape.add(embed(tape, EmbedLayer::kRnnOutput, next.hidden), system_read);
  out.similarities = tape.cosine_similarity(out.dialogue_embedding, state.action_table);

  const std::size_t n_actions = vocab_.action_names().size();
  if (features.target_index >= 0) {
    if (static_cast<std::size_t>(features.target_index) >= n_actions) {
      throw Error(ErrorKind::kUnknownIdentifier, "target action index out of range");
    }
    std::vector<double> onehot(n_actions, 0.0);
    onehot[features.target_index] = 1.0;
    Var row = tape.matmul(tape.vector(onehot), state.action_table);
    state.system.rows.push_back(row);
    state.system.keys.push_back(tape.matmul(row, tape.param(params_, system_head_.memory_w)));
  }
  state.step = t;
  return out;
}

Var RedpPolicy::step_loss(ad::Tape& tape, Var sims, int target) {
  const std::size_t n = vocab_.action_names().size();
  std::vector<double> onehot(n, 0.0), excluded(n, 0.0);
  onehot[target] = 1.0;
  excluded[target] = -4.0;  // below any cosine
  Var pos = tape.matmul(sims, tape.vector(onehot));
  Var max_neg = tape.reduce_max(tape.add(sims, tape.vector(excluded)));
  Var pos_term = tape.relu(tape.sub(tape.scalar(config_.mu_pos), pos));
  Var neg_term = tape.relu(tape.sub(max_neg, tape.scalar(config_.mu_neg)));
  return tape.add(pos_term, neg_term);
}

Var RedpPolicy::build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                           double weight, bool train, Rng& rng) {
  if (steps.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "dialogue has no action steps");
  AttentionState state = begin_dialogue(tape, train, rng);
  std::vector<Var> losses;
  losses.reserve(steps.size());
  for (const auto& f : steps) {
    if (f.target_index < 0) {
      throw Error(ErrorKind::kUnknownIdentifier, "training step without a target action");
    }
    StepOutput o = forward_step(tape, f, state, train, rng);
    losses.push_back(step_loss(tape, o.similarities, f.target_index));
  }
  Var total = tape.reduce_sum(tape.concat(losses));
  return tape.scale(tape.scalar(weight), total);
}

std::vector<policy::StepResult> RedpPolicy::run(
    const std::vector<feat::TurnFeatures>& steps) const {
  // Inference never calls backward, so the parameters are only read.
  auto* self = const_cast<RedpPolicy*>(this);
  ad::Tape tape;
  Rng unused(0);
  AttentionState state = self->begin_dialogue(tape, false, unused);
  std::vector<policy::StepResult> results;
  results.reserve(steps.size());
  for (const auto& f : steps) {
    StepOutput o = self->forward_step(tape, f, state, false, unused);
    policy::StepResult r;
    r.scores = to_vector(tape, o.similarities);
    r.predicted = policy::argmax_tiebreak(r.scores, vocab_.action_names());
    r.user_alignment = std::move(o.user_alignment);
    r.system_alignment = std::move(o.system_alignment);
    results.push_back(std::move(r));
  }
  return results;
}

ad::Checkpoint RedpPolicy::to_checkpoint() const {
  ad::Checkpoint c;
  c.kind = kind();
  c.config = config_.to_json();
  c.domain = json::parse(corpus::serialize_domain(spec_));
  c.params = params_;
  return c;
}

RedpPolicy RedpPolicy::from_checkpoint(const ad::Checkpoint& ckpt) {
  if (ckpt.kind != "redp") {
    throw Error(ErrorKind::kSchemaViolation, "checkpoint holds a '" + ckpt.kind + "' policy");
  }
  RedpPolicy p(corpus::parse_domain(ckpt.domain.dump()), RedpConfig::from_json(ckpt.config));
  if (ckpt.params.size() != p.params_.size()) {
    throw Error(ErrorKind::kSchemaViolation, "checkpoint parameter count does not match model");
  }
  for (auto& param : p.params_) {
    const auto& src = ckpt.params.at(ckpt.params.index_of(param.name));
    if (src.value.shape != param.value.shape) {
      throw Error(ErrorKind::kShapeMismatch, "checkpoint parameter " + param.name + " has shape " +
                                                 ad::shape_string(src.value.shape));
    }
    param.value = src.value;
    param.trainable = src.trainable;
  }
  return p;
}

policy::TrainingLog train(RedpPolicy& model, const std::vector<corpus::Dialogue>& dialogues,
                          std::function<void(const policy::EpochLog&)> on_epoch) {
  const RedpConfig& c = model.config();
  policy::TrainOptions options;
  options.epochs = c.epochs;
  options.batch_size = c.batch_size;
  options.learning_rate = c.learning_rate;
  options.seed = c.seed;
  options.patience = c.patience;
  options.on_epoch = std::move(on_epoch);
  return policy::fit(model, dialogues, options);
}

}  // namespace redp::model
