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

#include "redp/baseline.hpp"

#include <algorithm>

#include "redp/error.hpp"

namespace redp::baseline {

using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string_view encoding_name(PrevActionEncoding e) {
  return e == PrevActionEncoding::kBin ? "bin" : "lt";
}

PrevActionEncoding parse_encoding(std::string_view name) {
  if (name == "bin") return PrevActionEncoding::kBin;
  if (name == "lt") return PrevActionEncoding::kLt;
  throw Error(ErrorKind::kSchemaViolation,
              "unknown previous-action encoding '" + std::string(name) + "' (bin, lt)");
}

void BaselineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kSchemaViolation, msg); };
  if (input_dim < 1 || rnn_units < 1) fail("dimensions must be >= 1");
  if (!(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0)) {
    fail("recurrent_dropout must lie in [0, 1)");
  }
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (patience < 0) fail("patience must be >= 0");
}

json BaselineConfig::to_json() const {
  return json{{"input_dim", input_dim},
              {"rnn_units", rnn_units},
              {"recurrent_dropout", recurrent_dropout},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"patience", patience},
              {"seed", seed},
              {"prev_action_encoding", std::string(encoding_name(prev_action_encoding))}};
}

BaselineConfig BaselineConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kSchemaViolation, "config must be an object");
  BaselineConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "input_dim") c.input_dim = value.get<int>();
      else if (key == "rnn_units") c.rnn_units = value.get<int>();
      else if (key == "recurrent_dropout") c.recurrent_dropout = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "patience") c.patience = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "prev_action_encoding") {
        c.prev_action_encoding = parse_encoding(value.get<std::string>());
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

std::vector<double> featurize_input(const feat::TurnFeatures& features,
                                    const feat::Vocabulary& vocab) {
  if (features.user_vec.size() != vocab.user_tokens().size() ||
      features.slot_vec.size() != vocab.slot_names().size()) {
    throw Error(ErrorKind::kShapeMismatch, "turn features do not match the vocabulary");
  }
  std::vector<double> out;
  out.reserve(features.user_vec.size() + features.slot_vec.size() +
              vocab.action_tokens().size());
  for (double v : features.user_vec) out.push_back(v > 0.0 ? 1.0 : 0.0);
  for (double v : features.slot_vec) out.push_back(v > 0.0 ? 1.0 : 0.0);
  std::vector<double> code(vocab.action_tokens().size(), 0.0);
  if (features.prev_action_index >= 0) {
    const auto& names = vocab.action_names();
    if (static_cast<std::size_t>(features.prev_action_index) >= names.size()) {
      throw Error(ErrorKind::kUnknownIdentifier, "previous action index out of range");
    }
    code = feat::featurize_action(names[features.prev_action_index], vocab);
    for (auto& v : code) v = v > 0.0 ? 1.0 : 0.0;
  }
  out.insert(out.end(), code.begin(), code.end());
  return out;
}

LstmPolicy::LstmPolicy(corpus::DomainSpec spec, BaselineConfig config)
    : spec_(std::move(spec)), config_(config) {
  config_.validate();
  corpus::validate_domain(spec_);
  vocab_ = feat::build_vocabulary(spec_, config_.prev_action_encoding == PrevActionEncoding::kBin
                                             ? feat::ActionFeatMode::kSingleLabel
                                             : feat::ActionFeatMode::kTokenBag);
  input_size_ = vocab_.user_tokens().size() + vocab_.slot_names().size() +
                vocab_.action_tokens().size();
  Rng rng(config_.seed);
  const std::size_t di = config_.input_dim;
  const std::size_t dh = config_.rnn_units;
  input_proj_ = nn::add_dense(params_, "input_proj", input_size_, di, rng);
  lstm_ = nn::add_lstm(params_, "lstm", di, dh, nn::standard_biases(dh), rng);
  output_ = nn::add_dense(params_, "output", dh, vocab_.action_names().size(), rng);
}

std::string LstmPolicy::kind() const {
  return config_.prev_action_encoding == PrevActionEncoding::kBin ? "lstm_bin" : "lstm_lt";
}

std::vector<Var> LstmPolicy::forward(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                                     bool train, Rng& rng) {
  const std::size_t dh = config_.rnn_units;
  Var h = tape.constant(Tensor::zeros({dh}));
  Var c = tape.constant(Tensor::zeros({dh}));
  std::vector<double> mask;
  if (train && config_.recurrent_dropout > 0.0) {
    const double keep = 1.0 - config_.recurrent_dropout;
    mask.resize(dh);
    for (auto& v : mask) v = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  std::vector<Var> logits;
  logits.reserve(steps.size());
  for (const auto& f : steps) {
    Var x = nn::apply_dense(tape, params_, input_proj_, tape.vector(featurize_input(f, vocab_)));
    Var h_in = mask.empty() ? h : tape.dropout_with_mask(h, mask);
    nn::LstmState s = nn::lstm_step(tape, params_, lstm_, x, h_in, c);
    h = s.hidden;
    c = s.cell;
    logits.push_back(nn::apply_dense(tape, params_, output_, h));
  }
  return logits;
}

Var LstmPolicy::build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>& steps,
                           double weight, bool train, Rng& rng) {
  if (steps.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "dialogue has no action steps");
  auto logits = forward(tape, steps, train, rng);
  const std::size_t n = vocab_.action_names().size();
  std::vector<Var> terms;
  terms.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const int target = steps[i].target_index;
    if (target < 0 || static_cast<std::size_t>(target) >= n) {
      throw Error(ErrorKind::kUnknownIdentifier, "training step without a known target action");
    }
    std::vector<double> onehot(n, 0.0);
    onehot[target] = 1.0;
    Var logp = tape.log(tape.softmax(logits[i]));
    terms.push_back(tape.matmul(logp, tape.vector(onehot)));
  }
  Var total = tape.reduce_sum(tape.concat(terms));
  return tape.scale(tape.scalar(-weight), total);
}

std::vector<policy::StepResult> LstmPolicy::run(
    const std::vector<feat::TurnFeatures>& steps) const {
  // Inference never calls backward, so the parameters are only read.
  auto* self = const_cast<LstmPolicy*>(this);
  ad::Tape tape;
  Rng unused(0);
  auto logits = self->forward(tape, steps, false, unused);
  std::vector<policy::StepResult> out;
  out.reserve(steps.size());
  for (Var l : logits) {
    policy::StepResult r;
    auto p = tape.data(tape.softmax(l));
    r.scores.assign(p.begin(), p.end());
    r.predicted = policy::argmax_tiebreak(r.scores, vocab_.action_names());
    out.push_back(std::move(r));
  }
  return out;
}

ad::Checkpoint LstmPolicy::to_checkpoint() const {
  ad::Checkpoint c;
  c.kind = kind();
  c.config = config_.to_json();
  c.domain = json::parse(corpus::serialize_domain(spec_));
  c.params = params_;
  return c;
}

LstmPolicy LstmPolicy::from_checkpoint(const ad::Checkpoint& ckpt) {
  if (ckpt.kind != "lstm_bin" && ckpt.kind != "lstm_lt") {
    throw Error(ErrorKind::kSchemaViolation, "checkpoint holds a '" + ckpt.kind + "' policy");
  }
  LstmPolicy p(corpus::parse_domain(ckpt.domain.dump()), BaselineConfig::from_json(ckpt.config));
  if (p.kind() != ckpt.kind) {
    throw Error(ErrorKind::kSchemaViolation, "checkpoint kind does not match its config");
  }
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

policy::TrainingLog train(LstmPolicy& model, const std::vector<corpus::Dialogue>& dialogues,
                          std::function<void(const policy::EpochLog&)> on_epoch) {
  const BaselineConfig& c = model.config();
  policy::TrainOptions options;
  options.epochs = c.epochs;
  options.batch_size = c.batch_size;
  options.learning_rate = c.learning_rate;
  options.seed = c.seed;
  options.patience = c.patience;
  options.on_epoch = std::move(on_epoch);
  return policy::fit(model, dialogues, options);
}

}  // namespace redp::baseline
