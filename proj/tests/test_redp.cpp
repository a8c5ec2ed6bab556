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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "redp/ad/optim.hpp"
#include "redp/error.hpp"
#include "redp/nn.hpp"
#include "redp/redp.hpp"
#include "redp/simuser.hpp"
#include "test_support.hpp"

using namespace redp;
using namespace redp::model;

TEST_SUITE("redp") {

TEST_CASE("loss step examples") {
  const std::vector<double> neg_low = {-1.0, -1.0, -1.0};
  CHECK(loss_step(1.0, neg_low, 0.8, 0.2) == 0.0);
  const std::vector<double> neg_a = {-0.3, 0.1};
  CHECK(loss_step(0.5, neg_a, 0.8, 0.2) == doctest::Approx(0.3).epsilon(1e-15));
  const std::vector<double> neg_b = {0.5, 0.0};
  CHECK(loss_step(0.0, neg_b, 0.8, 0.2) == doctest::Approx(1.1).epsilon(1e-15));
  try {
    loss_step(0.5, std::span<const double>{}, 0.8, 0.2);
    FAIL("expected EmptyNegatives");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyNegatives);
  }
}

TEST_CASE("binarized history rewrite") {
  const std::vector<std::vector<double>> states = {{1, 0}, {0, 1}, {4, 4}};
  const std::vector<double> one_hot = {0, 1, 0};
  CHECK(history_rewrite(states, one_hot) == std::vector<double>{0, 1});
  const std::vector<double> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  auto mean = history_rewrite(states, uniform);
  CHECK(mean[0] == doctest::Approx(5.0 / 3));
  CHECK(mean[1] == doctest::Approx(5.0 / 3));
  const std::vector<std::vector<double>> single = {{2, 3}};
  const std::vector<double> p1 = {1.0};
  CHECK(history_rewrite(single, p1) == std::vector<double>{2, 3});
  const std::vector<double> skewed = {0.5, 0.3, 0.2};
  CHECK(binarize_attention(skewed) == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("chrono initialization") {
  Rng rng(4);
  auto b = nn::chrono_biases(64, 48, rng);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(b.forget[i] >= 0.0);
    CHECK(b.forget[i] <= std::log(47.0));
    CHECK(b.input[i] == -b.forget[i]);
  }
  auto flat = nn::chrono_biases(8, 2, rng);
  for (double f : flat.forget) CHECK(f == 0.0);
}

TEST_CASE("attention head limits") {
  Rng rng(2);
  ad::ParameterStore ps;
  auto head = add_attention_head(ps, "att", 4, 3, 5, rng);
  ad::Tape tape;
  ad::Var control = tape.vector(std::vector<double>{0.1, -0.2, 0.3, 0.4});
  ad::Var m1 = tape.vector(std::vector<double>{1, 2, 3});
  ad::Var mw = tape.param(ps, head.memory_w);
  std::vector<ad::Var> rows = {m1};
  std::vector<ad::Var> keys = {tape.matmul(m1, mw)};
  auto one = attention_read(tape, ps, head, control, rows, keys, std::nullopt);
  CHECK(tape.value(one.probs).data == std::vector<double>{1.0});

  // Zero score scale and an identity shift kernel leave a uniform read.
  ps.at(head.score_g).value.data = {0.0};
  ps.at(head.shift_b).value.data = {-60.0, 60.0, -60.0};
  ad::Tape t2;
  ad::Var c2 = t2.vector(std::vector<double>{0.1, -0.2, 0.3, 0.4});
  std::vector<ad::Var> r3, k3;
  for (int i = 0; i < 3; ++i) {
    r3.push_back(t2.vector(std::vector<double>{double(i), 1, 0}));
    k3.push_back(t2.matmul(r3.back(), t2.param(ps, head.memory_w)));
  }
  auto uni = t2.value(attention_read(t2, ps, head, c2, r3, k3, std::nullopt).probs).data;
  for (double p : uni) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // A pure -1 shift moves all mass of a peaked distribution one row back.
  CHECK(t2.value(t2.conv1d(t2.vector(std::vector<double>{0, 1, 0}),
                           t2.vector(std::vector<double>{1, 0, 0})))
            .data == std::vector<double>{1, 0, 0});

  std::vector<ad::Var> none;
  try {
    attention_read(t2, ps, head, c2, none, none, std::nullopt);
    FAIL("expected EmptyMemory");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyMemory);
  }
}

TEST_CASE("embedding layers") {
  RedpPolicy p(testing::toy_domain(), RedpConfig{});
  const auto& v = p.vocab();
  std::vector<double> zeros(v.action_tokens().size(), 0.0);
  auto e0 = p.embed(EmbedLayer::kAction, zeros);
  CHECK(e0 == p.params().at(p.params().index_of("action_embed/b")).value.data);

  // Only the differing tokens' weight rows survive the difference.
  auto price = p.embed(EmbedLayer::kAction, feat::featurize_action("utter_ask_price", v));
  auto people = p.embed(EmbedLayer::kAction, feat::featurize_action("utter_ask_people", v));
  const auto& w = p.params().at(p.params().index_of("action_embed/w")).value;
  const std::size_t d = w.shape[1];
  const std::size_t ip = v.action_token_index("price"), iq = v.action_token_index("people");
  for (std::size_t j = 0; j < d; ++j)
    CHECK(price[j] - people[j] ==
          doctest::Approx(w.data[ip * d + j] - w.data[iq * d + j]).epsilon(1e-12));
}

TEST_CASE("forward step conventions") {
  auto d = testing::toy_dialogue();
  RedpConfig cfg;
  RedpPolicy p(testing::toy_domain(), cfg);
  auto steps = feat::featurize_dialogue(d, p.vocab());
  auto a = p.run(steps);
  auto b = p.run(steps);
  REQUIRE(a.size() == steps.size());
  CHECK(a[0].system_alignment.empty());
  CHECK(a[0].user_alignment.size() == 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].scores == b[i].scores);
    if (i > 0) {
      CHECK(a[i].system_alignment.size() == i);
      CHECK(std::accumulate(a[i].system_alignment.begin(), a[i].system_alignment.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  cfg.use_user_attention = false;
  RedpPolicy q(testing::toy_domain(), cfg);
  for (const auto& r : q.run(steps)) CHECK(r.user_alignment.empty());
}

TEST_CASE("config json") {
  RedpConfig c;
  c.mu_pos = 0.7;
  c.rewrite_target = RewriteTarget::kBoth;
  auto back = RedpConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  try {
    RedpConfig::from_json({{"mu_plus", 0.9}});
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchemaViolation);
  }
}

TEST_CASE("full loss gradient on small dimensions") {
  RedpConfig cfg;
  cfg.recurrent_dropout = 0.0;
  cfg.embed_dim = 4;
  cfg.rnn_units = 5;
  cfg.attention_key_dim = 4;
  RedpPolicy p(testing::toy_domain(), cfg);
  auto steps = feat::featurize_dialogue(testing::toy_dialogue(), p.vocab());
  Rng rng(1);
  auto r = ad::grad_check(
      p.params(),
      [&](ad::Tape& t, ad::ParameterStore&) {
        return p.build_loss(t, steps, 1.0 / steps.size(), false, rng);
      },
      3e-4, 0, 0, ad::Stencil::kFourPoint);
  CAPTURE(r.worst_param);
  CAPTURE(r.worst_analytic);
  CAPTURE(r.worst_numeric);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.coords_skipped * 50 < r.coords_checked);
}

TEST_CASE("training and self-consistency") {
  auto bundle = sim::handcrafted_corpora();
  RedpConfig cfg;
  cfg.seed = 1;
  RedpPolicy p(bundle.hotel_domain, cfg);
  std::vector<double> losses;
  auto log = train(p, bundle.cooperative_hotel,
                   [&](const policy::EpochLog& e) { losses.push_back(e.mean_loss); });
  CHECK(log.reached_full_accuracy);
  for (double l : losses) CHECK(std::isfinite(l));
  // Over the final half, every 20-epoch window ends no higher than it began.
  for (std::size_t i = losses.size() / 2; i + 20 < losses.size(); ++i) {
    CAPTURE(i);
    CHECK(losses[i + 20] <= losses[i]);
  }

  for (const auto& d : bundle.cooperative_hotel) {
    corpus::Dialogue prefix{d.name, {}};
    for (const auto& s : d.steps) {
      if (const auto* act = std::get_if<corpus::ActionStep>(&s)) {
        auto pred = policy::predict(p, prefix);
        CHECK(pred.action == act->name);
      }
      prefix.steps.push_back(s);
    }
  }

  RedpPolicy again(bundle.hotel_domain, cfg);
  train(again, bundle.cooperative_hotel);
  CHECK(again.params() == p.params());

  auto restored = RedpPolicy::from_checkpoint(p.to_checkpoint());
  auto steps = feat::featurize_dialogue(bundle.cooperative_hotel[0], p.vocab());
  CHECK(restored.run(steps)[3].scores == p.run(steps)[3].scores);
}

TEST_CASE("ties go to the smaller name") {
  CHECK(policy::argmax_tiebreak({0.5, 0.9, 0.9}, {"a", "zeta", "beta"}) == 2);
  CHECK(policy::argmax_tiebreak({0.5, 0.9, 0.9}, {"a", "beta", "zeta"}) == 1);
}

}  // TEST_SUITE
