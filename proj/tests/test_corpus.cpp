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

#include <cstring>
#include <functional>

#include "redp/corpus.hpp"
#include "redp/error.hpp"
#include "redp/util.hpp"

using namespace redp;
using namespace redp::corpus;

namespace {

const char* kDomain = R"({"intents":["greet","inform"],"entities":["price","city"],
  "slots":["price","city"],"actions":["utter_greet","utter_ask_price","utter_ask_city"]})";

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIoFailure;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("domain parsing appends action_listen") {
  auto spec = parse_domain(
      R"({"intents":["greet"],"entities":["city"],"slots":["city"],"actions":["utter_ask_city"]})");
  CHECK(spec.actions == std::vector<std::string>{"utter_ask_city", "action_listen"});
  CHECK(spec.action_index("action_listen") == 1);
  CHECK(parse_domain(serialize_domain(spec)) == spec);
}

TEST_CASE("domain schema violations") {
  CHECK(kind_of([] { parse_domain(R"({"intents":[],"entities":[],"actions":[]})"); }) ==
        ErrorKind::kSchemaViolation);
  CHECK(kind_of([] {
          parse_domain(R"({"intents":["inform"],"entities":[],"slots":["cuisine"],"actions":[]})");
        }) == ErrorKind::kSchemaViolation);
  CHECK(kind_of([] { parse_domain("{not json"); }) == ErrorKind::kMalformedDocument);
}

TEST_CASE("story grammar") {
  auto spec = parse_domain(kDomain);
  auto ds = parse_stories("## s\n* greet\n  - utter_greet\n", spec);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].name == "s");
  REQUIRE(ds[0].steps.size() == 2);
  CHECK(std::get<UserTurn>(ds[0].steps[0]).intent == "greet");
  CHECK(std::get<ActionStep>(ds[0].steps[1]).name == "utter_greet");

  auto e = parse_stories("## e\n* inform{\"price\": \"cheap\"}\n  - utter_ask_city\n", spec);
  const auto& turn = std::get<UserTurn>(e[0].steps[0]);
  CHECK(turn.intent == "inform");
  CHECK(turn.entities == std::map<std::string, std::string>{{"price", "cheap"}});

  CHECK(kind_of([&] { parse_stories("## u\n* greet\n  - utter_unknown\n", spec); }) ==
        ErrorKind::kUnknownIdentifier);
  CHECK(kind_of([&] { parse_stories("## u\n* shout\n  - utter_greet\n", spec); }) ==
        ErrorKind::kUnknownIdentifier);
}

TEST_CASE("story serialization") {
  auto spec = parse_domain(kDomain);
  CHECK(serialize_stories({}).empty());
  const std::string text =
      "## s\n* inform{\"price\":\"cheap\",\"city\":\"rome\"}\n  - utter_greet\n";
  auto ds = parse_stories(text, spec);
  const std::string out = serialize_stories(ds);
  CHECK(parse_stories(out, spec) == ds);
  // Canonical key order regardless of input order.
  CHECK(out.find("{\"city\":\"rome\",\"price\":\"cheap\"}") != std::string::npos);
}

TEST_CASE("listen expansion") {
  Dialogue d{"d", {UserTurn{"greet", {}}, ActionStep{"utter_greet"}, UserTurn{"inform", {}},
                   ActionStep{"utter_ask_price"}}};
  auto x = expand_listen(d);
  std::vector<Step> expected = {UserTurn{"greet", {}},  ActionStep{"utter_greet"},
                                ActionStep{"action_listen"}, UserTurn{"inform", {}},
                                ActionStep{"utter_ask_price"}, ActionStep{"action_listen"}};
  CHECK(x.steps == expected);
  CHECK(expand_listen(x) == x);

  Dialogue open{"o", {UserTurn{"greet", {}}, ActionStep{"utter_greet"}, UserTurn{"inform", {}}}};
  CHECK(kind_of([&] { expand_listen(open); }) == ErrorKind::kIncompleteTurn);
}

TEST_CASE("dedupe ignores names") {
  Dialogue a{"a", {UserTurn{"greet", {}}, ActionStep{"utter_greet"}}};
  Dialogue b = a;
  b.name = "b";
  Dialogue c{"c", {UserTurn{"inform", {}}, ActionStep{"utter_greet"}}};
  CHECK(dedupe({a, b}).size() == 1);
  CHECK(dedupe({a, b})[0].name == "a");
  CHECK(dedupe({a, c}) == std::vector<Dialogue>{a, c});
}

TEST_CASE("seeded split") {
  std::vector<Dialogue> ds;
  for (int i = 0; i < 108; ++i)
    ds.push_back({"d" + std::to_string(i), {UserTurn{"inform", {{"price", std::to_string(i)}}}}});
  auto s1 = split(ds, 30, 7);
  auto s2 = split(ds, 30, 7);
  CHECK(s1.train.size() == 78);
  CHECK(s1.test.size() == 30);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  auto s0 = split(ds, 0, 7);
  CHECK(s0.train == ds);
  CHECK(s0.test.empty());
}

TEST_CASE("util helpers") {
  std::vector<double> xs = {0.1, -0.0, 1e-300, 3.141592653589793};
  auto back = util::decode_doubles(util::encode_doubles(xs));
  REQUIRE(back.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(std::memcmp(&back[i], &xs[i], sizeof(double)) == 0);
  // Published FNV-1a 64 test vectors.
  CHECK(util::hex64(util::fnv1a64("")) == "cbf29ce484222325");
  CHECK(util::hex64(util::fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(util::is_identifier("utter_ask_price"));
  CHECK_FALSE(util::is_identifier("Utter"));
}

}  // TEST_SUITE
