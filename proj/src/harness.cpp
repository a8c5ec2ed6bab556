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

#include "redp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "redp/error.hpp"
#include "redp/util.hpp"

namespace redp::harness {

using corpus::Dialogue;
using nlohmann::json;

double EvalReport::accuracy() const {
  return defined() ? static_cast<double>(n_fully_correct) / static_cast<double>(n_dialogues) : 0.0;
}

json EvalReport::to_json() const {
  json per = json::object();
  for (const auto& [name, t] : per_action) {
    per[name] = {{"correct", t.correct}, {"total", t.total}};
  }
  json out = {{"policy", policy},
              {"seed", seed},
              {"n_dialogues", n_dialogues},
              {"n_fully_correct", n_fully_correct},
              {"n_actions", n_actions},
              {"n_correct_actions", n_correct_actions},
              {"accuracy_defined", defined()},
              {"per_action", per},
              {"first_error", first_error}};
  out["accuracy"] = defined() ? json(accuracy()) : json(nullptr);
  return out;
}

namespace {

std::vector<int> free_running_predictions(const policy::Policy& policy,
                                          std::vector<feat::TurnFeatures> steps) {
  std::vector<int> predicted(steps.size(), -1);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<feat::TurnFeatures> prefix(steps.begin(), steps.begin() + i + 1);
    auto results = policy.run(prefix);
    predicted[i] = results.back().predicted;
    // Later steps see the prediction instead of the label.
    steps[i].target_index = predicted[i];
    if (i + 1 < steps.size()) steps[i + 1].prev_action_index = predicted[i];
  }
  return predicted;
}

}  // namespace

EvalReport eval_accuracy(const policy::Policy& policy, const std::vector<Dialogue>& test,
                         bool free_running) {
  EvalReport report;
  report.policy = policy.kind();
  report.seed = policy.config_json().value("seed", std::uint64_t{0});
  const auto& names = policy.vocab().action_names();
  for (const auto& d : test) {
    try {
      corpus::validate_dialogue(d, policy.domain());
    } catch (const Error& e) {
      throw Error(ErrorKind::kDomainMismatch, "dialogue '" + d.name + "': " + e.what());
    }
    auto steps = feat::featurize_dialogue(d, policy.vocab());
    std::vector<int> predicted;
    if (free_running) {
      predicted = free_running_predictions(policy, steps);
    } else {
      for (const auto& r : policy.run(steps)) predicted.push_back(r.predicted);
    }
    int first_error = -1;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const bool ok = predicted[i] == steps[i].target_index;
      auto& tally = report.per_action[names[steps[i].target_index]];
      ++tally.total;
      if (ok) {
        ++tally.correct;
        ++report.n_correct_actions;
      } else if (first_error < 0) {
        first_error = static_cast<int>(i);
      }
    }
    report.n_actions += steps.size();
    ++report.n_dialogues;
    if (first_error < 0) ++report.n_fully_correct;
    report.first_error.push_back(first_error);
  }
  return report;
}

std::string_view kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRedp: return "redp";
    case PolicyKind::kLstmBin: return "lstm_bin";
    case PolicyKind::kLstmLt: return "lstm_lt";
  }
  return "?";
}

PolicyKind parse_kind(std::string_view name) {
  if (name == "redp") return PolicyKind::kRedp;
  if (name == "lstm_bin") return PolicyKind::kLstmBin;
  if (name == "lstm_lt") return PolicyKind::kLstmLt;
  throw Error(ErrorKind::kSchemaViolation,
              "unknown policy '" + std::string(name) + "' (redp, lstm_bin, lstm_lt)");
}

std::unique_ptr<policy::Policy> make_policy(PolicyKind kind, const corpus::DomainSpec& spec,
                                            const PolicyConfigs& configs, std::uint64_t seed) {
  if (kind == PolicyKind::kRedp) {
    model::RedpConfig c = configs.redp;
    c.seed = seed;
    return std::make_unique<model::RedpPolicy>(spec, c);
  }
  baseline::BaselineConfig c = configs.lstm;
  c.seed = seed;
  c.prev_action_encoding =
      kind == PolicyKind::kLstmBin ? baseline::PrevActionEncoding::kBin : baseline::PrevActionEncoding::kLt;
  return std::make_unique<baseline::LstmPolicy>(spec, c);
}

policy::TrainingLog train_policy(policy::Policy& policy, const std::vector<Dialogue>& dialogues,
                                 std::function<void(const policy::EpochLog&)> on_epoch) {
  const json c = policy.config_json();
  policy::TrainOptions options;
  options.epochs = c.at("epochs").get<int>();
  options.batch_size = c.at("batch_size").get<int>();
  options.learning_rate = c.at("learning_rate").get<double>();
  options.seed = c.at("seed").get<std::uint64_t>();
  options.patience = c.at("patience").get<int>();
  options.on_epoch = std::move(on_epoch);
  return policy::fit(policy, dialogues, options);
}

ad::Checkpoint policy_checkpoint(const policy::Policy& policy) {
  if (const auto* r = dynamic_cast<const model::RedpPolicy*>(&policy)) return r->to_checkpoint();
  if (const auto* l = dynamic_cast<const baseline::LstmPolicy*>(&policy)) return l->to_checkpoint();
  throw Error(ErrorKind::kSchemaViolation, "unsupported policy type");
}

std::unique_ptr<policy::Policy> policy_from_checkpoint(const ad::Checkpoint& ckpt) {
  if (ckpt.kind == "redp") {
    return std::make_unique<model::RedpPolicy>(model::RedpPolicy::from_checkpoint(ckpt));
  }
  return std::make_unique<baseline::LstmPolicy>(baseline::LstmPolicy::from_checkpoint(ckpt));
}

ExperimentData build_experiment_data(const sim::BundledCorpora& bundle,
                                     const ExperimentOptions& options) {
  ExperimentData data;
  data.hotel_domain = bundle.hotel_domain;
  data.merged_domain = corpus::merge_domains({bundle.hotel_domain, bundle.restaurant_domain});
  data.cooperative_hotel = bundle.cooperative_hotel;
  data.cooperative_restaurant = bundle.cooperative_restaurant;
  data.uncooperative_restaurant = bundle.uncooperative_seed_restaurant;
  auto generated = sim::generate_dialogues(sim::hotel_task(), options.generate,
                                           options.max_user_turns, options.seed, bundle.values);
  if (generated.size() > options.keep) generated.resize(options.keep);
  auto parts = corpus::split(generated, options.n_test, options.seed);
  data.hotel_train = std::move(parts.train);
  data.hotel_test = std::move(parts.test);
  return data;
}

std::string_view variant_name(Variant v) { return v == Variant::kD1 ? "d1" : "d2"; }

Variant parse_variant(std::string_view name) {
  if (name == "d1") return Variant::kD1;
  if (name == "d2") return Variant::kD2;
  throw Error(ErrorKind::kSchemaViolation, "unknown variant '" + std::string(name) + "' (d1, d2)");
}

const corpus::DomainSpec& variant_domain(const ExperimentData& data, Variant v) {
  return v == Variant::kD1 ? data.hotel_domain : data.merged_domain;
}

std::vector<Dialogue> training_set(const ExperimentData& data, Variant v,
                                   std::size_t n_uncooperative, std::uint64_t seed) {
  if (n_uncooperative > data.hotel_train.size()) {
    throw Error(ErrorKind::kInvalidFraction,
                "fraction " + std::to_string(n_uncooperative) + " exceeds the " +
                    std::to_string(data.hotel_train.size()) + " uncooperative training dialogues");
  }
  std::vector<std::size_t> order(data.hotel_train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(n_uncooperative);
  std::sort(order.begin(), order.end());

  std::vector<Dialogue> out = data.cooperative_hotel;
  for (std::size_t i : order) out.push_back(data.hotel_train[i]);
  if (v == Variant::kD2) {
    out.insert(out.end(), data.cooperative_restaurant.begin(), data.cooperative_restaurant.end());
    out.insert(out.end(), data.uncooperative_restaurant.begin(),
               data.uncooperative_restaurant.end());
  }
  return out;
}

json CurvePoint::to_json() const {
  return json{{"fraction", fraction}, {"mean", mean}, {"std", std}, {"runs", runs},
              {"accuracies", accuracies}};
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::uint64_t subsample_seed(std::uint64_t seed, std::size_t run) {
  return seed * 1000003ULL + run * 7919ULL + 17ULL;
}

CurvePoint summarize(std::size_t fraction, std::vector<double> accuracies) {
  CurvePoint p;
  p.fraction = fraction;
  p.runs = accuracies.size();
  p.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
           static_cast<double>(accuracies.size());
  double var = 0.0;
  for (double a : accuracies) var += (a - p.mean) * (a - p.mean);
  p.std = std::sqrt(var / static_cast<double>(accuracies.size()));
  p.accuracies = std::move(accuracies);
  return p;
}

}  // namespace

std::vector<CurvePoint> learning_curve(const ExperimentData& data, const CurveOptions& options) {
  if (options.runs == 0) throw Error(ErrorKind::kInvalidFraction, "runs must be at least 1");
  for (std::size_t f : options.fractions) {
    if (f > data.hotel_train.size()) {
      throw Error(ErrorKind::kInvalidFraction,
                  "fraction " + std::to_string(f) + " exceeds the " +
                      std::to_string(data.hotel_train.size()) + " uncooperative training dialogues");
    }
  }
  const std::size_t nf = options.fractions.size();
  std::vector<double> acc(nf * options.runs, 0.0);
  const corpus::DomainSpec& spec = variant_domain(data, options.variant);
  parallel_for(nf * options.runs, options.jobs, [&](std::size_t task) {
    const std::size_t fi = task / options.runs;
    const std::size_t run = task % options.runs;
    const std::size_t fraction = options.fractions[fi];
    auto train = training_set(data, options.variant, fraction, subsample_seed(options.seed, run));
    auto policy = make_policy(options.kind, spec, options.configs, options.seed + run);
    train_policy(*policy, train);
    acc[task] = eval_accuracy(*policy, data.hotel_test).accuracy();
    if (options.on_run) options.on_run(fraction, run, acc[task]);
  });
  std::vector<CurvePoint> curve;
  for (std::size_t fi = 0; fi < nf; ++fi) {
    curve.push_back(summarize(options.fractions[fi],
                              std::vector<double>(acc.begin() + fi * options.runs,
                                                  acc.begin() + (fi + 1) * options.runs)));
  }
  return curve;
}

std::vector<AblationArm> default_arms() {
  return {{"full", true, true, true},
          {"system_attention", false, true, true},
          {"user_attention", true, false, false},
          {"no_attention", false, false, false}};
}

std::vector<AblationRow> ablation(const ExperimentData& data, const std::vector<AblationArm>& arms,
                                  CurveOptions options) {
  std::vector<AblationRow> rows;
  options.kind = PolicyKind::kRedp;
  options.variant = Variant::kD1;
  for (const auto& arm : arms) {
    CurveOptions o = options;
    o.configs.redp.use_user_attention = arm.use_user_attention;
    o.configs.redp.use_system_attention = arm.use_system_attention;
    o.configs.redp.use_history_rewrite = arm.use_history_rewrite;
    rows.push_back({arm, learning_curve(data, o)});
  }
  return rows;
}

std::vector<AttentionRecord> attention_trace(const model::RedpPolicy& policy,
                                             const Dialogue& dialogue) {
  corpus::validate_dialogue(dialogue, policy.domain());
  auto steps = feat::featurize_dialogue(dialogue, policy.vocab());
  if (steps.empty()) {
    throw Error(ErrorKind::kMalformedDocument,
                "dialogue '" + dialogue.name + "' has no action steps to trace");
  }
  auto results = policy.run(steps);
  const auto& names = policy.vocab().action_names();
  std::vector<AttentionRecord> out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    AttentionRecord r;
    r.step = i;
    r.action = names[results[i].predicted];
    r.target = steps[i].target_action;
    r.user_alignments = results[i].user_alignment;
    r.system_alignments = results[i].system_alignment;
    out.push_back(std::move(r));
  }
  return out;
}

std::string attention_json(const std::vector<AttentionRecord>& records,
                           const std::string& dialogue) {
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"step", r.step},
                    {"action", r.action},
                    {"target", r.target},
                    {"user_alignments", r.user_alignments},
                    {"system_alignments", r.system_alignments}});
  }
  nlohmann::ordered_json doc;
  doc["schema"] = "redp-attention";
  doc["schema_version"] = kAttentionSchemaVersion;
  doc["dialogue"] = dialogue;
  doc["records"] = recs;
  return doc.dump(1) + "\n";
}

void export_attention(const std::vector<AttentionRecord>& records, const std::string& dialogue,
                      const std::filesystem::path& path) {
  if (records.empty()) throw Error(ErrorKind::kMalformedDocument, "no attention records to export");
  util::write_file_atomic(path, attention_json(records, dialogue));
}

std::string format_curve(const std::string& title, const std::vector<CurvePoint>& curve) {
  std::string out = title + "\n";
  char line[128];
  std::snprintf(line, sizeof line, "%10s %8s %8s %5s\n", "fraction", "mean", "std", "runs");
  out += line;
  for (const auto& p : curve) {
    std::snprintf(line, sizeof line, "%10zu %8.3f %8.3f %5zu\n", p.fraction, p.mean, p.std, p.runs);
    out += line;
  }
  return out;
}

}  // namespace redp::harness
