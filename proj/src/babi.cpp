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


#include "redp/babi.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "redp/error.hpp"
#include "redp/rng.hpp"
#include "redp/util.hpp"

namespace redp::babi {

namespace {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_placeholder(const std::string& tok) {
  return tok.size() > 2 && tok.front() == '{' && tok.back() == '}';
}

std::vector<Template> parse_templates(const nlohmann::json& arr, const char* label_key) {
  std::vector<Template> out;
  if (!arr.is_array()) throw Error(ErrorKind::kSchemaViolation, "template list must be an array");
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains(label_key) || !item.contains("template"))
      throw Error(ErrorKind::kSchemaViolation,
                  std::string("template entry needs '") + label_key + "' and 'template'");
    Template t;
    t.label = item.at(label_key).get<std::string>();
    if (!util::is_identifier(t.label))
      throw Error(ErrorKind::kSchemaViolation, "bad label '" + t.label + "'");
    t.tokens = tokenize(item.at("template").get<std::string>());
    if (t.tokens.empty()) throw Error(ErrorKind::kSchemaViolation, "empty template");
    out.push_back(std::move(t));
  }
  return out;
}

bool match_one(const TemplateInventory& inv, const Template& t,
               const std::vector<std::string>& toks, std::map<std::string, std::string>& caps) {
  if (t.tokens.size() != toks.size()) return false;
  caps.clear();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& pt = t.tokens[i];
    if (!is_placeholder(pt)) {
      if (pt != toks[i]) return false;
      continue;
    }
    const std::string name = pt.substr(1, pt.size() - 2);
    if (auto v = inv.values.find(name); v != inv.values.end()) {
      if (std::find(v->second.begin(), v->second.end(), toks[i]) == v->second.end()) return false;
    } else if (auto p = inv.patterns.find(name); p != inv.patterns.end()) {
      if (!std::regex_match(toks[i], std::regex(p->second))) return false;
    }
    caps[name] = toks[i];
  }
  return true;
}

bool match_any(const TemplateInventory& inv, const std::vector<Template>& ts,
               std::string_view utterance, Match& out) {
  const auto toks = tokenize(utterance);
  for (const auto& t : ts) {
    if (match_one(inv, t, toks, out.captures)) {
      out.label = t.label;
      return true;
    }
  }
  return false;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

TemplateInventory parse_inventory(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, std::string("template inventory: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "redp-babi-templates")
    throw Error(ErrorKind::kSchemaViolation, "not a redp-babi-templates document");
  TemplateInventory inv;
  try {
    inv.slots = doc.at("slots").get<std::vector<std::string>>();
    if (doc.contains("values"))
      inv.values = doc.at("values").get<std::map<std::string, std::vector<std::string>>>();
    if (doc.contains("patterns"))
      inv.patterns = doc.at("patterns").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("template inventory: ") + e.what());
  }
  for (const auto& [name, re] : inv.patterns) {
    try {
      std::regex check(re);
    } catch (const std::regex_error&) {
      throw Error(ErrorKind::kSchemaViolation, "bad pattern for '" + name + "'");
    }
  }
  inv.user = parse_templates(doc.at("user"), "intent");
  inv.system = parse_templates(doc.at("system"), "action");
  return inv;
}

std::filesystem::path default_inventory_path() {
  if (const char* env = std::getenv("REDP_DATA_DIR"); env && *env)
    return std::filesystem::path(env) / "babi" / "task5_templates.json";
  return std::filesystem::path(REDP_DATA_DIR) / "babi" / "task5_templates.json";
}

TemplateInventory load_inventory(const std::filesystem::path& path) {
  return parse_inventory(util::read_file(path));
}

bool match_user(const TemplateInventory& inv, std::string_view utterance, Match& out) {
  return match_any(inv, inv.user, utterance, out);
}

bool match_system(const TemplateInventory& inv, std::string_view utterance, Match& out) {
  return match_any(inv, inv.system, utterance, out);
}

BabiCorpus ingest(std::string_view text, const TemplateInventory& inv) {
  BabiCorpus out;
  for (const auto& t : inv.user) push_unique(out.domain.intents, t.label);
  out.domain.entities = inv.slots;
  out.domain.slots = inv.slots;
  for (const auto& t : inv.system) push_unique(out.domain.actions, t.label);
  push_unique(out.domain.actions, std::string(corpus::kActionListen));

  corpus::Dialogue cur;
  long expected_id = 1;
  auto flush = [&] {
    if (cur.steps.empty()) return;
    cur.name = "babi_" + std::to_string(out.dialogues.size() + 1);
    out.dialogues.push_back(corpus::expand_listen(cur));
    cur = {};
  };

  const auto lines = util::split(text, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string where = "line " + std::to_string(ln + 1);
    std::string_view line = util::trim(lines[ln]);
    if (line.empty()) {
      flush();
      expected_id = 1;
      continue;
    }
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos)
      throw Error(ErrorKind::kMalformedBabi, where + ": missing line number");
    const std::string id_text(line.substr(0, sp));
    char* end = nullptr;
    const long id = std::strtol(id_text.c_str(), &end, 10);
    if (end == id_text.c_str() || *end != '\0' || id < 1)
      throw Error(ErrorKind::kMalformedBabi, where + ": bad line number '" + id_text + "'");
    if (id == 1 && expected_id != 1) {
      flush();
      expected_id = 1;
    }
    if (id != expected_id)
      throw Error(ErrorKind::kMalformedBabi, where + ": expected line number " +
                                                 std::to_string(expected_id));
    ++expected_id;
    const std::string_view body = line.substr(sp + 1);
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos) {
      // Knowledge-base fact: <entity> <attribute> <value>
      const auto toks = tokenize(body);
      if (toks.size() != 3 || !util::starts_with(toks[1], "R_"))
        throw Error(ErrorKind::kMalformedBabi, where + ": expected a tab-separated turn or a fact");
      continue;
    }
    const std::string_view user = util::trim(body.substr(0, tab));
    const std::string_view bot = util::trim(body.substr(tab + 1));
    if (bot.empty()) throw Error(ErrorKind::kMalformedBabi, where + ": empty system utterance");
    if (user == "<SILENCE>") {
      if (cur.steps.empty())
        throw Error(ErrorKind::kMalformedBabi, where + ": dialogue opens with <SILENCE>");
    } else {
      Match m;
      if (!match_user(inv, user, m))
        throw Error(ErrorKind::kUnmatchedUtterance, where + ": user '" + std::string(user) + "'");
      corpus::UserTurn turn{m.label, {}};
      for (const auto& [k, v] : m.captures)
        if (out.domain.has_entity(k)) turn.entities[k] = v;
      cur.steps.emplace_back(std::move(turn));
    }
    Match m;
    if (!match_system(inv, bot, m))
      throw Error(ErrorKind::kUnmatchedUtterance, where + ": system '" + std::string(bot) + "'");
    cur.steps.emplace_back(corpus::ActionStep{m.label});
  }
  flush();
  corpus::validate_domain(out.domain);
  for (const auto& d : out.dialogues) corpus::validate_dialogue(d, out.domain);
  return out;
}

namespace {

constexpr std::array<const char*, 10> kCuisines = {"british",  "cantonese", "french", "indian",
                                                   "italian",  "japanese",  "korean", "spanish",
                                                   "thai",     "vietnamese"};
constexpr std::array<const char*, 10> kLocations = {"bangkok", "beijing", "bombay", "hanoi",
                                                    "london",  "madrid",  "paris",  "rome",
                                                    "seoul",   "tokyo"};
constexpr std::array<const char*, 4> kPartySizes = {"two", "four", "six", "eight"};
constexpr std::array<const char*, 3> kPrices = {"cheap", "moderate", "expensive"};

// Slot order of the system's questions.
enum Slot { kCuisine, kLocation, kPeople, kPrice };

template <std::size_t N>
std::string pick(Rng& rng, const std::array<const char*, N>& xs) {
  return xs[rng.below(N)];
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[rng.below(xs.size())];
}

std::string draw_value(Rng& rng, int slot) {
  switch (slot) {
    case kCuisine: return pick(rng, kCuisines);
    case kLocation: return pick(rng, kLocations);
    case kPeople: return pick(rng, kPartySizes);
    default: return pick(rng, kPrices);
  }
}

class Writer {
 public:
  explicit Writer(std::ostringstream& out) : out_(out) {}
  void turn(const std::string& user, const std::string& bot) {
    out_ << id_++ << ' ' << user << '\t' << bot << '\n';
  }
  void fact(const std::string& line) { out_ << id_++ << ' ' << line << '\n'; }

 private:
  std::ostringstream& out_;
  int id_ = 1;
};

}  // namespace

std::string synthesize(std::size_t n, std::uint64_t seed) {
  Rng root(seed);
  std::ostringstream out;
  const std::vector<std::string> greets = {"hello", "hi", "good morning"};
  const std::vector<std::string> prefixes = {"can you book a table", "may i have a table"};
  const std::vector<std::string> thanks = {"thank you", "thanks", "you rock"};
  const std::vector<std::string> phone_q = {"do you have its phone number",
                                            "may i have the phone number of the restaurant"};
  const std::vector<std::string> addr_q = {"do you have its address",
                                           "can you provide the address"};
  const std::array<const char*, 4> asks = {"any preference on a type of cuisine",
                                           "where should it be",
                                           "how many people would be in your party",
                                           "which price range are looking for"};

  for (std::size_t d = 0; d < n; ++d) {
    Rng rng = root.fork(d);
    Writer w(out);
    std::array<std::string, 4> val;
    for (int s = 0; s < 4; ++s) val[s] = draw_value(rng, s);
    std::array<bool, 4> given{};
    for (auto& g : given) g = rng.uniform() < 0.5;

    w.turn(pick(rng, greets), "hello what can i help you with today");
    std::string req = pick(rng, prefixes);
    if (given[kPeople]) req += " for " + val[kPeople] + " people";
    if (given[kLocation]) req += " in " + val[kLocation];
    if (given[kPrice]) req += " in a " + val[kPrice] + " price range";
    if (given[kCuisine]) req += " with " + val[kCuisine] + " food";
    w.turn(req, "i'm on it");

    std::string user = "<SILENCE>";
    for (int s = 0; s < 4; ++s) {
      if (given[s]) continue;
      w.turn(user, asks[s]);
      switch (s) {
        case kCuisine: user = "i love " + val[s] + " food"; break;
        case kLocation: user = val[s] + " please"; break;
        case kPeople: user = "for " + val[s] + " people please"; break;
        default: user = "in a " + val[s] + " price range please"; break;
      }
    }
    w.turn(user, "ok let me look into some options for you");

    auto search = [&] {
      w.turn("<SILENCE>", "api_call " + val[0] + ' ' + val[1] + ' ' + val[2] + ' ' + val[3]);
      const std::size_t n_results = 2 + rng.below(3);
      std::vector<std::string> restos;
      for (std::size_t r = 0; r < n_results; ++r) {
        std::string name = "resto_" + val[kLocation] + '_' + val[kPrice] + '_' +
                           val[kCuisine] + '_' + std::to_string(r + 1) + "stars";
        w.fact(name + " R_cuisine " + val[kCuisine]);
        w.fact(name + " R_location " + val[kLocation]);
        w.fact(name + " R_price " + val[kPrice]);
        w.fact(name + " R_number " + val[kPeople]);
        w.fact(name + " R_phone " + name + "_phone");
        w.fact(name + " R_address " + name + "_address");
        restos.push_back(std::move(name));
      }
      rng.shuffle(std::span<std::string>(restos));
      w.turn("<SILENCE>", "what do you think of this option: " + restos[0]);
      return restos;
    };
    std::vector<std::string> restos = search();

    // Optional change of mind in reply to the first suggestion.
    if (rng.uniform() < 0.4) {
      const std::size_t n_updates = 1 + rng.below(2);
      for (std::size_t u = 0; u < n_updates; ++u) {
        const int s = static_cast<int>(rng.below(4));
        std::string v;
        do v = draw_value(rng, s);
        while (v == val[s]);
        val[s] = v;
        switch (s) {
          case kCuisine: user = "instead could it be with " + v + " food"; break;
          case kLocation: user = "actually i would prefer in " + v; break;
          case kPeople: user = "instead could it be for " + v + " people"; break;
          default: user = "actually i would prefer in a " + v + " price range"; break;
        }
        w.turn(user, "sure is there anything else to update");
      }
      w.turn("no", "ok let me look into some options for you");
      restos = search();
    }

    const std::size_t rejects = rng.below(restos.size());
    for (std::size_t r = 1; r <= rejects; ++r) {
      w.turn("no this does not work for me", "sure let me find an other option for you");
      w.turn("<SILENCE>", "what do you think of this option: " + restos[r]);
    }
    w.turn("let's do it", "great let me do the reservation");
    const std::string& chosen = restos[rejects];
    const bool want_phone = rng.uniform() < 0.5;
    const bool want_addr = rng.uniform() < 0.5;
    const bool addr_first = rng.uniform() < 0.5;
    auto ask_phone = [&] { w.turn(pick(rng, phone_q), "here it is " + chosen + "_phone"); };
    auto ask_addr = [&] { w.turn(pick(rng, addr_q), "here it is " + chosen + "_address"); };
    if (addr_first) {
      if (want_addr) ask_addr();
      if (want_phone) ask_phone();
    } else {
      if (want_phone) ask_phone();
      if (want_addr) ask_addr();
    }
    w.turn(pick(rng, thanks), "is there anything i can help you with");
    w.turn("no thank you", "you're welcome");
    out << '\n';
  }
  return out.str();
}

}  // namespace redp::babi
