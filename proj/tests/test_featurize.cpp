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

#include "redp/corpus.hpp"
#include "redp/featurize.hpp"

using namespace redp;
using namespace redp::feat;
using corpus::ActionStep;
using corpus::UserTurn;

namespace {

corpus::DomainSpec spec() {
  return corpus::parse_domain(R"({"intents":["inform","ask_why","greet"],
    "entities":["price","city"],"slots":["price","city"],
    "actions":["utter_greet","utter_ask_price","utter_ask_city","action_search_restaurant",
               "utter_explain_details_hotel","utter_explain_details_restaurant"]})");
}

std::map<std::string, double> active(const std::vector<double>& v,
                                     const std::vector<std::string>& names) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out[names[i]] = v[i];
  return out;
}

}  // namespace

TEST_SUITE("featurize") {

TEST_CASE("vocabulary tokens") {
  auto one = corpus::parse_domain(
      R"({"intents":["inform","ask_why"],"entities":["price"],"slots":["price"],"actions":[]})");
  Vocabulary v(one, ActionFeatMode::kTokenBag);
  CHECK(v.user_tokens() == std::vector<std::string>{"ask", "inform", "price", "why"});

  Vocabulary tb(spec(), ActionFeatMode::kTokenBag);
  auto f = featurize_action("action_search_restaurant", tb);
  CHECK(active(f, tb.action_tokens()) ==
        std::map<std::string, double>{{"action", 1}, {"restaurant", 1}, {"search", 1}});
  CHECK(active(featurize_action("action_listen", tb), tb.action_tokens()) ==
        std::map<std::string, double>{{"action", 1}, {"listen", 1}});

  Vocabulary sl(spec(), ActionFeatMode::kSingleLabel);
  CHECK(sl.action_tokens().size() == sl.action_names().size());
}

TEST_CASE("user features") {
  Vocabulary v(spec(), ActionFeatMode::kTokenBag);
  CHECK(active(featurize_user(UserTurn{"inform", {{"price", "cheap"}}}, v), v.user_tokens()) ==
        std::map<std::string, double>{{"inform", 1}, {"price", 1}});
  CHECK(active(featurize_user(UserTurn{"ask_why", {}}, v), v.user_tokens()) ==
        std::map<std::string, double>{{"ask", 1}, {"why", 1}});
  CHECK(active(featurize_user(UserTurn{"inform", {{"price", "cheap"}, {"city", "rome"}}}, v),
               v.user_tokens()) ==
        std::map<std::string, double>{{"city", 1}, {"inform", 1}, {"price", 1}});
}

TEST_CASE("shared action features") {
  auto shared = [](const Vocabulary& v, const char* a, const char* b) {
    auto x = featurize_action(a, v), y = featurize_action(b, v);
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] != 0 && y[i] != 0);
    return n;
  };
  Vocabulary tb(spec(), ActionFeatMode::kTokenBag);
  CHECK(shared(tb, "utter_explain_details_hotel", "utter_explain_details_restaurant") == 3);
  Vocabulary sl(spec(), ActionFeatMode::kSingleLabel);
  for (const auto& a : sl.action_names())
    for (const auto& b : sl.action_names())
      if (a != b) CHECK(shared(sl, a.c_str(), b.c_str()) == 0);
}

TEST_CASE("slot tracking") {
  auto s = spec();
  corpus::Dialogue d{"d", {UserTurn{"inform", {{"price", "cheap"}}}, ActionStep{"utter_ask_city"},
                           UserTurn{"inform", {{"price", "expensive"}}}, ActionStep{"utter_greet"}}};
  auto slots = track_slots(d, s);
  REQUIRE(slots.size() == 2);
  CHECK(slots[0] == std::vector<double>{1, 0});
  CHECK(slots[1] == std::vector<double>{1, 0});
  CHECK(slot_values(d).at("price") == "expensive");

  corpus::Dialogue e{"e", {UserTurn{"inform", {{"city", "rome"}}}, ActionStep{"utter_greet"},
                           UserTurn{"inform", {{"price", "cheap"}}}, ActionStep{"utter_greet"}}};
  CHECK(track_slots(e, s)[1] == std::vector<double>{1, 1});

  corpus::Dialogue none{"n", {UserTurn{"greet", {}}, ActionStep{"utter_greet"}}};
  CHECK(track_slots(none, s)[0] == std::vector<double>{0, 0});
}

TEST_CASE("dialogue featurization") {
  Vocabulary v(spec(), ActionFeatMode::kTokenBag);
  corpus::Dialogue d{"d", {UserTurn{"greet", {}}, ActionStep{"utter_greet"},
                           ActionStep{"utter_ask_price"}, ActionStep{"action_listen"}}};
  auto steps = featurize_dialogue(d, v);
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].target_action == "utter_greet");
  CHECK(steps[2].target_action == "action_listen");
  CHECK(steps[0].prev_action_index == -1);
  CHECK(steps[1].prev_action_index == steps[0].target_index);
  CHECK(steps[1].user_vec == steps[0].user_vec);
}

}  // TEST_SUITE
