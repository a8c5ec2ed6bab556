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


// Fixtures shared by the unit and acceptance suites.

#ifndef REDP_TESTS_TEST_SUPPORT_HPP_
#define REDP_TESTS_TEST_SUPPORT_HPP_

#include <vector>

#include "redp/corpus.hpp"

namespace redp::testing {

inline corpus::DomainSpec toy_domain() {
  return corpus::parse_domain(R"({"intents":["greet","inform","chitchat"],
    "entities":["price","people"],"slots":["price","people"],
    "actions":["utter_greet","utter_ask_price","utter_ask_people","action_chitchat",
               "action_search_hotel"]})");
}

// Three user turns, one of them off-task.
inline corpus::Dialogue toy_dialogue() {
  auto ds = corpus::parse_stories(R"(## toy
* greet
  - utter_greet
  - utter_ask_price
* chitchat
  - action_chitchat
  - utter_ask_price
* inform{"price":"cheap"}
  - action_search_hotel
)", toy_domain());
  return corpus::expand_listen(ds.at(0));
}

}  // namespace redp::testing

#endif  // REDP_TESTS_TEST_SUPPORT_HPP_
