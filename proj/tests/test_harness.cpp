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


#include <doctest.h>

#include <cmath>
#include <numeric>

#include "redp/error.hpp"
#include "redp/harness.hpp"
#include "redp/simuser.hpp"
#include "test_support.hpp"

using namespace redp;
using namespace redp::harness;

namespace {

// Predicts every label except action_chitchat.
class ScriptedPolicy : public policy::Policy {
 public:
  explicit ScriptedPolicy(corpus::DomainSpec spec)
      : spec_(std::move(spec)), vocab_(spec_, feat::ActionFeatMode::kTokenBag) {}
  std::string kind() const override { return "scripted"; }
  const corpus::DomainSpec& domain() const override { return spec_; }
  const feat::Vocabulary& vocab() const override { return vocab_; }
  ad::ParameterStore& params() override { return params_; }
  const ad::ParameterStore& params() const override { return params_; }
  nlohmann::json config_json() const override { return nlohmann::json::object(); }
  ad::Var build_loss(ad::Tape& tape, const std::vector<feat::TurnFeatures>&, double, bool,
                     Rng&) override {
    return tape.scalar(0.0);
  }
  std::vector<policy::StepResult> run(
      const std::vector<feat::TurnFeatures>& steps) const override {
    std::vector<policy::StepResult> out;
    const int chitchat = vocab_.action_index("action_chitchat");
    for (const auto& s : steps) {
      policy::StepResult r;
      r.scores.assign(vocab_.action_names().size(), 0.0);
      r.predicted = s.target_index == chitchat ? 0 : std::max(s.target_index, 0);
      r.scores[r.predicted] = 1.0;
      out.push_back(r);
    }
    return out;
  }

 private:
  corpus::DomainSpec spec_;
  feat::Vocabulary vocab_;
  ad::ParameterStore params_;
};

const ExperimentData& data() {
  static const ExperimentData d = build_experiment_data(sim::handcrafted_corpora(), {});
  return d;
}

PolicyConfigs quick_configs() {
  PolicyConfigs c;
  c.lstm.epochs = 3;
  c.redp.epochs = 2;
  return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("evaluation counts whole dialogues") {
  auto spec = testing::toy_domain();
  auto with_chitchat = testing::toy_dialogue();
  auto plain = corpus::expand_listen(corpus::parse_stories(
      "## p\n* greet\n  - utter_greet\n  - utter_ask_price\n* inform{\"price\":\"x\"}\n"
      "  - action_search_hotel\n", spec)[0]);
  ScriptedPolicy p(spec);
  auto r = eval_accuracy(p, {plain, with_chitchat, plain});
  CHECK(r.n_dialogues == 3);
  CHECK(r.n_fully_correct == 2);
  CHECK(r.first_error == std::vector<int>{-1, 3, -1});
  CHECK(r.per_action.at("action_chitchat").correct == 0);

  auto empty = eval_accuracy(p, {});
  CHECK(empty.n_dialogues == 0);
  CHECK_FALSE(empty.defined());
  CHECK(empty.to_json().at("accuracy").is_null());
}

TEST_CASE("experiment data") {
  const auto& d = data();
  CHECK(d.hotel_train.size() == 78);
  CHECK(d.hotel_test.size() == 30);
  CHECK(training_set(d, Variant::kD1, 0, 3) == d.cooperative_hotel);
  auto d2 = training_set(d, Variant::kD2, 0, 3);
  CHECK(d2.size() == d.cooperative_hotel.size() + d.cooperative_restaurant.size() +
                         d.uncooperative_restaurant.size());
  // Subsets grow by inclusion.
  auto small = training_set(d, Variant::kD1, 13, 3), large = training_set(d, Variant::kD1, 26, 3);
  for (const auto& x : small)
    CHECK(std::find(large.begin(), large.end(), x) != large.end());
  try {
    training_set(d, Variant::kD1, 79, 3);
    FAIL("expected InvalidFraction");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidFraction);
  }
}

TEST_CASE("learning curve bookkeeping") {
  CurveOptions opt;
  opt.kind = PolicyKind::kLstmLt;
  opt.fractions = {0, 13};
  opt.runs = 5;
  opt.seed = 4;
  opt.configs = quick_configs();
  opt.jobs = 1;
  auto a = learning_curve(data(), opt);
  opt.jobs = 3;
  auto b = learning_curve(data(), opt);
  REQUIRE(a.size() == 2);
  for (const auto& pt : a) {
    CHECK(pt.runs == 5);
    REQUIRE(pt.accuracies.size() == 5);
    const double mean = std::accumulate(pt.accuracies.begin(), pt.accuracies.end(), 0.0) / 5;
    double var = 0;
    for (double x : pt.accuracies) var += (x - mean) * (x - mean);
    CHECK(pt.mean == doctest::Approx(mean));
    CHECK(pt.std == doctest::Approx(std::sqrt(var / 5)));
  }
  CHECK(format_curve("t", a) == format_curve("t", b));
}

TEST_CASE("ablation arms train") {
  CurveOptions opt;
  opt.fractions = {13};
  opt.runs = 1;
  opt.configs = quick_configs();
  auto arms = default_arms();
  REQUIRE(arms.size() == 4);
  CHECK(arms.back().name == "no_attention");
  auto rows = ablation(data(), {arms.back()}, opt);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].curve[0].runs == 1);
}

TEST_CASE("attention export") {
  model::RedpConfig cfg;
  model::RedpPolicy p(testing::toy_domain(), cfg);
  auto records = attention_trace(p, testing::toy_dialogue());
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    CHECK(std::accumulate(r.user_alignments.begin(), r.user_alignments.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    if (!r.system_alignments.empty())
      CHECK(std::accumulate(r.system_alignments.begin(), r.system_alignments.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-9));
  }
  auto doc = nlohmann::json::parse(attention_json(records, "toy"));
  CHECK(doc.at("schema") == "redp-attention");
  CHECK(doc.at("schema_version") == kAttentionSchemaVersion);
  try {
    attention_trace(p, corpus::Dialogue{"empty", {}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMalformedDocument);
  }
}

TEST_CASE("policy checkpoints for every kind") {
  auto spec = testing::toy_domain();
  auto steps = feat::featurize_dialogue(testing::toy_dialogue(), feat::Vocabulary(
      spec, feat::ActionFeatMode::kTokenBag));
  for (auto kind : {PolicyKind::kRedp, PolicyKind::kLstmBin, PolicyKind::kLstmLt}) {
    CAPTURE(kind_name(kind));
    auto p = make_policy(kind, spec, quick_configs(), 9);
    auto q = policy_from_checkpoint(policy_checkpoint(*p));
    CHECK(q->kind() == p->kind());
    CHECK(q->params() == p->params());
    auto d = testing::toy_dialogue();
    CHECK(policy::predict(*q, d).ranking == policy::predict(*p, d).ranking);
  }
}

}  // TEST_SUITE
