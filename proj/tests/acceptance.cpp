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


// Acceptance suite: one PASS/FAIL line per criterion, details indented
// below it. Arguments select criteria by number; default runs all nine.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "redp/ad/optim.hpp"
#include "redp/babi.hpp"
#include "redp/baseline.hpp"
#include "redp/harness.hpp"
#include "redp/redp.hpp"
#include "redp/simuser.hpp"
#include "redp/util.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace redp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(double x, int prec = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

const harness::ExperimentData& experiment_data() {
  static const harness::ExperimentData d =
      harness::build_experiment_data(sim::handcrafted_corpora(), {});
  return d;
}

// ---- 1 ---------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  model::RedpConfig cfg;
  cfg.recurrent_dropout = 0.0;
  model::RedpPolicy p(testing::toy_domain(), cfg);
  const auto steps = feat::featurize_dialogue(testing::toy_dialogue(), p.vocab());
  Rng rng(0);
  const auto r = ad::grad_check(
      p.params(),
      [&](ad::Tape& t, ad::ParameterStore&) {
        return p.build_loss(t, steps, 1.0 / steps.size(), false, rng);
      },
      1e-3, 0, 0, ad::Stencil::kFourPoint);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = r.max_rel_error < 1e-4 && secs < 60.0 && r.coords_skipped * 100 < r.coords_checked;
  o.summary = "max relative error " + sci(r.max_rel_error) + " over " +
              std::to_string(r.coords_checked) + " coordinates in " + fmt(secs, 1) + " s";
  o.details.push_back("worst at " + r.worst_param + " (analytic " + sci(r.worst_analytic) +
                      ", numeric " + sci(r.worst_numeric) + "); " +
                      std::to_string(r.coords_skipped) + " coordinates skipped at kinks");
  return o;
}

// ---- 2 ---------------------------------------------------------------------

Outcome loss_suite() {
  Outcome o;
  const std::vector<double> a = {-1.0, -1.0}, b = {0.1, -0.5}, c = {0.5, 0.2};
  const double l1 = model::loss_step(1.0, a, 0.8, 0.2);
  const double l2 = model::loss_step(0.5, b, 0.8, 0.2);
  const double l3 = model::loss_step(0.0, c, 0.8, 0.2);
  bool examples = l1 == 0.0 && std::abs(l2 - 0.3) < 1e-15 && std::abs(l3 - 1.1) < 1e-15;
  o.details.push_back("examples: " + fmt(l1, 17) + ", " + fmt(l2, 17) + ", " + fmt(l3, 17));

  Rng rng(1000);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double pos = rng.uniform(-1, 1);
    std::vector<double> neg(1 + rng.below(12));
    for (auto& x : neg) x = rng.uniform(-1, 1);
    const double mu_pos = rng.uniform(0, 1), mu_neg = rng.uniform(-1, 1);
    const double l = model::loss_step(pos, neg, mu_pos, mu_neg);
    const double hardest = *std::max_element(neg.begin(), neg.end());
    const double expect = std::max(mu_pos - pos, 0.0) + std::max(hardest - mu_neg, 0.0);
    const bool zero_iff_satisfied = (l == 0.0) == (pos >= mu_pos && hardest <= mu_neg);
    // Only the hardest negative matters.
    std::vector<double> easier = neg;
    for (auto& x : easier)
      if (x != hardest) x = -1.0;
    const bool only_max = model::loss_step(pos, easier, mu_pos, mu_neg) == l;
    if (std::abs(l - expect) > 1e-15 || l < 0 || !zero_iff_satisfied || !only_max) ++violations;
  }
  o.details.push_back("hinge characterization violations: " + std::to_string(violations) +
                      "/1000");
  o.pass = examples && violations == 0;
  o.summary = std::string(examples ? "3/3 examples" : "example mismatch") + ", " +
              std::to_string(1000 - violations) + "/1000 random draws";
  return o;
}

// ---- 3 ---------------------------------------------------------------------

Outcome memorization() {
  const auto t0 = Clock::now();
  const auto bundle = sim::handcrafted_corpora();
  Outcome o;
  int ok = 0, total = 0;
  for (auto kind : {harness::PolicyKind::kRedp, harness::PolicyKind::kLstmBin,
                    harness::PolicyKind::kLstmLt}) {
    std::string line = std::string(harness::kind_name(kind)) + ":";
    for (std::uint64_t seed : {1, 2, 3}) {
      auto p = harness::make_policy(kind, bundle.hotel_domain, {}, seed);
      auto log = harness::train_policy(*p, bundle.cooperative_hotel);
      const auto& last = log.epochs.back();
      const bool full = last.action_accuracy == 1.0;
      ok += full;
      ++total;
      line += " seed " + std::to_string(seed) + " " + fmt(last.action_accuracy, 4) + " (" +
              std::to_string(log.epochs.size()) + " epochs)";
    }
    o.details.push_back(line);
  }
  const double secs = seconds_since(t0);
  o.pass = ok == total && secs < 300.0;
  o.summary = std::to_string(ok) + "/" + std::to_string(total) +
              " runs at 100% training action accuracy in " + fmt(secs, 1) + " s";
  return o;
}

// ---- 4 ---------------------------------------------------------------------

std::vector<harness::CurvePoint> curve(harness::PolicyKind kind,
                                       const std::vector<std::size_t>& fractions,
                                       std::size_t runs) {
  harness::CurveOptions opt;
  opt.kind = kind;
  opt.fractions = fractions;
  opt.runs = runs;
  return harness::learning_curve(experiment_data(), opt);
}

std::string curve_row(const std::string& name, const std::vector<harness::CurvePoint>& c) {
  std::string s = name + ":";
  for (const auto& p : c)
    s += " " + std::to_string(p.fraction) + "=" + fmt(p.mean) + "±" + fmt(p.std);
  return s;
}

Outcome generalization() {
  const auto t0 = Clock::now();
  // The criterion compares fractions >= 26 and the full-data point only.
  const std::vector<std::size_t> fractions = {26, 39, 52, 65, 78};
  const auto redp_curve = curve(harness::PolicyKind::kRedp, fractions, 5);
  const auto bin_curve = curve(harness::PolicyKind::kLstmBin, fractions, 5);
  const auto lt_curve = curve(harness::PolicyKind::kLstmLt, fractions, 5);
  Outcome o;
  o.details.push_back(curve_row("redp", redp_curve));
  o.details.push_back(curve_row("lstm_bin", bin_curve));
  o.details.push_back(curve_row("lstm_lt", lt_curve));
  bool ordered = true;
  for (std::size_t i = 0; i < fractions.size(); ++i)
    ordered = ordered && redp_curve[i].mean >= bin_curve[i].mean &&
              redp_curve[i].mean >= lt_curve[i].mean;
  const double final_acc = redp_curve.back().mean;
  o.pass = ordered && final_acc >= 0.9;
  o.summary = std::string(ordered ? "REDP >= both baselines" : "ordering violated") +
              " at fractions 26..78; REDP at 78 = " + fmt(final_acc) + " (" +
              fmt(seconds_since(t0) / 60, 1) + " min)";
  return o;
}

// ---- 5 ---------------------------------------------------------------------

Outcome ablation() {
  const auto t0 = Clock::now();
  std::vector<harness::AblationArm> arms;
  for (const auto& arm : harness::default_arms())
    if (arm.name == "system_attention" || arm.name == "no_attention") arms.push_back(arm);
  harness::CurveOptions opt;
  opt.fractions = {13, 26, 78};
  opt.runs = 3;
  const auto rows = harness::ablation(experiment_data(), arms, opt);
  Outcome o;
  for (const auto& r : rows) o.details.push_back(curve_row(r.arm.name, r.curve));
  const auto& sys = rows[0].curve;
  const auto& none = rows[1].curve;
  const bool low = sys[0].mean > none[0].mean && sys[1].mean > none[1].mean;
  o.pass = low && none[2].mean >= 0.9;
  o.summary = "system attention vs none at 13: " + fmt(sys[0].mean) + " vs " +
              fmt(none[0].mean) + ", at 26: " + fmt(sys[1].mean) + " vs " +
              fmt(none[1].mean) + "; none at 78 = " + fmt(none[2].mean) + " (" +
              fmt(seconds_since(t0) / 60, 1) + " min)";
  return o;
}

// ---- 6 ---------------------------------------------------------------------

Outcome babi_task5() {
  const auto t0 = Clock::now();
  const auto inv = babi::load_inventory();
  const auto train = babi::ingest(babi::synthesize(1000, 1), inv);
  const auto test = babi::ingest(babi::synthesize(1000, 2), inv);
  Outcome o;
  bool all = true;
  std::string summary;
  for (auto kind : {harness::PolicyKind::kRedp, harness::PolicyKind::kLstmLt}) {
    const auto t1 = Clock::now();
    auto p = harness::make_policy(kind, train.domain, {}, 5);
    auto log = harness::train_policy(*p, train.dialogues);
    const auto report = harness::eval_accuracy(*p, test.dialogues);
    all = all && report.n_fully_correct == report.n_dialogues;
    const std::string name(harness::kind_name(kind));
    summary += (summary.empty() ? "" : ", ") + name + " " +
               std::to_string(report.n_fully_correct) + "/" +
               std::to_string(report.n_dialogues);
    o.details.push_back(name + ": " + std::to_string(log.epochs.size()) + " epochs on " +
                        std::to_string(train.dialogues.size()) + " dialogues, " +
                        fmt(seconds_since(t1), 1) + " s");
  }
  o.pass = all;
  o.summary = summary + " test dialogues fully correct (" + fmt(seconds_since(t0), 1) + " s)";
  return o;
}

// ---- 7 ---------------------------------------------------------------------

Outcome response_distribution() {
  const auto task = sim::hotel_task();
  const auto values = sim::load_values(sim::default_bundle_dir());
  sim::SimState state = sim::initial_state(task, 6);
  sim::advance(state, corpus::UserTurn{"inform", {{"price", values.at("price").at(0)}}}, task);
  Rng rng(7);
  std::map<sim::DeviationType, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[sim::sample_user_turn(state, task, values, rng).second]++;
  Outcome o;
  o.pass = true;
  std::string line;
  for (int t = 0; t < sim::kDeviationTypeCount; ++t) {
    const auto type = static_cast<sim::DeviationType>(t);
    const double f = counts[type] / double(n);
    o.pass = o.pass && std::abs(f - 0.2) <= 0.02;
    line += std::string(line.empty() ? "" : ", ") + std::string(sim::deviation_name(type)) +
            " " + fmt(f, 4);
  }
  o.summary = line;
  return o;
}

// ---- 8 ---------------------------------------------------------------------

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "redp_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::vector<std::string>& args) {
  std::string cmd = "cd '" + scratch().string() + "' && '" REDP_CLI_PATH "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

// Every file of a run except manifests, which record wall-clock time.
std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (!e.is_regular_file() || name.ends_with("manifest.json")) continue;
    out[fs::relative(e.path(), root).string()] = util::read_file(e.path());
  }
  return out;
}

Outcome determinism() {
  const fs::path dir = scratch();
  util::write_file_atomic(dir / "quick.json", R"({"epochs": 4})");
  // Each command writes under OUT. The second run replays the argv recorded
  // in the first run's manifest, with only the output directory renamed.
  const std::vector<std::vector<std::string>> commands = {
      {"generate", "--domain", "restaurant", "--n", "40", "--seed", "3", "--out",
       "OUT/r.stories"},
      {"babi", "--synthesize", "30", "--seed", "4", "--out", "OUT"},
      {"train", "--policy", "redp", "--fraction", "13", "--seed", "2", "--quiet", "--out", "OUT"},
      {"train", "--policy", "lstm_bin", "--fraction", "13", "--seed", "2", "--quiet", "--out",
       "OUT"},
      {"eval", "--checkpoint", "det2a/checkpoint.json", "--out", "OUT"},
      {"export-attention", "--checkpoint", "det2a/checkpoint.json", "--out", "OUT"},
      {"curve", "--policy", "lstm_lt", "--variant", "d2", "--runs", "2", "--fractions", "0,13",
       "--config", "quick.json", "--out", "OUT"},
      {"ablate", "--runs", "1", "--fractions", "13", "--arms", "full,no_attention", "--config",
       "quick.json", "--out", "OUT"},
  };
  Outcome o;
  o.pass = true;
  std::size_t files = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const std::string out1 = "det" + std::to_string(i) + "a";
    const std::string out2 = "det" + std::to_string(i) + "b";
    std::vector<std::string> first;
    for (const auto& a : commands[i]) first.push_back(replace_all(a, "OUT", out1));
    const std::string label = commands[i][0];
    if (run_cli(first) != 0) {
      o.pass = false;
      o.details.push_back(label + ": first run failed");
      continue;
    }
    const fs::path manifest_path = label == "generate" ? dir / out1 / "r.stories.manifest.json"
                                                       : dir / out1 / "manifest.json";
    const auto manifest = nlohmann::json::parse(util::read_file(manifest_path));
    const auto argv = manifest.at("argv").get<std::vector<std::string>>();
    std::vector<std::string> replay;
    for (std::size_t k = 1; k < argv.size(); ++k) replay.push_back(replace_all(argv[k], out1, out2));
    if (run_cli(replay) != 0) {
      o.pass = false;
      o.details.push_back(label + ": replay failed");
      continue;
    }
    const auto a = artifacts(dir / out1), b = artifacts(dir / out2);
    const bool same = a == b && !a.empty();
    o.pass = o.pass && same;
    files += a.size();
    o.details.push_back(label + ": " + std::to_string(a.size()) + " files " +
                        (same ? "byte-identical" : "DIFFER"));
  }
  o.summary = std::to_string(commands.size()) + " commands replayed from their manifests, " +
              std::to_string(files) + " output files compared";
  return o;
}

// ---- 9 ---------------------------------------------------------------------

bool same_results(const std::vector<policy::StepResult>& a,
                  const std::vector<policy::StepResult>& b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].scores != b[i].scores || a[i].predicted != b[i].predicted ||
        a[i].user_alignment != b[i].user_alignment ||
        a[i].system_alignment != b[i].system_alignment)
      return false;
  }
  return true;
}

bool normalized(const std::vector<double>& w) {
  if (w.empty()) return true;
  double sum = 0;
  for (double x : w) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

Outcome causality() {
  const auto task = sim::hotel_task();
  const auto spec = sim::task_domain(task);
  const auto values = sim::load_values(sim::default_bundle_dir());
  const auto dialogues = sim::generate_unique(task, 100, 12, 99, values);
  const auto bundle = sim::handcrafted_corpora();

  std::vector<std::unique_ptr<policy::Policy>> policies;
  auto trained = harness::make_policy(harness::PolicyKind::kRedp, spec, {}, 1);
  harness::train_policy(*trained, bundle.cooperative_hotel);
  policies.push_back(std::move(trained));
  policies.push_back(harness::make_policy(harness::PolicyKind::kRedp, spec, {}, 2));
  policies.push_back(harness::make_policy(harness::PolicyKind::kLstmLt, spec, {}, 3));

  Rng rng(9);
  std::size_t checks = 0, causal_fail = 0, norm_fail = 0;
  for (const auto& d : dialogues) {
    // Perturbation: from a random action step on, relabel every action other
    // than action_listen and change every later user turn's entities.
    std::vector<std::size_t> action_pos;
    for (std::size_t i = 0; i < d.steps.size(); ++i)
      if (corpus::is_action(d.steps[i])) action_pos.push_back(i);
    const std::size_t cut_action = rng.below(action_pos.size());
    corpus::Dialogue changed = d;
    for (std::size_t i = action_pos[cut_action]; i < changed.steps.size(); ++i) {
      if (auto* a = std::get_if<corpus::ActionStep>(&changed.steps[i])) {
        if (a->name != corpus::kActionListen)
          a->name = spec.actions[rng.below(spec.actions.size() - 1)];
      } else if (auto* u = std::get_if<corpus::UserTurn>(&changed.steps[i])) {
        u->intent = "chitchat";
        u->entities = {{"people", "99"}};
      }
    }
    for (const auto& p : policies) {
      const auto s1 = feat::featurize_dialogue(d, p->vocab());
      const auto s2 = feat::featurize_dialogue(changed, p->vocab());
      const auto r1 = p->run(s1), r2 = p->run(s2);
      // The label of the first changed action is not yet visible to its own
      // prediction, so predictions match up to and including it.
      if (!same_results(r1, r2, cut_action + 1)) ++causal_fail;
      for (const auto& r : r1)
        if (!normalized(r.user_alignment) || !normalized(r.system_alignment)) ++norm_fail;
      ++checks;
    }
  }
  Outcome o;
  o.pass = causal_fail == 0 && norm_fail == 0 && dialogues.size() == 100;
  o.summary = std::to_string(checks - causal_fail) + "/" + std::to_string(checks) +
              " prefix checks unchanged, " + std::to_string(norm_fail) +
              " unnormalized attention steps (" + std::to_string(dialogues.size()) +
              " dialogues, 3 policies)";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "ranking loss suite", loss_suite},
      {3, "memorization", memorization},
      {4, "generalization ordering", generalization},
      {5, "attention ablation", ablation},
      {6, "bAbI task 5", babi_task5},
      {7, "simulated-user distribution", response_distribution},
      {8, "CLI determinism", determinism},
      {9, "causality and attention invariants", causality},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << o.summary
              << std::endl;
    for (const auto& d : o.details) std::cout << "         " << d << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
