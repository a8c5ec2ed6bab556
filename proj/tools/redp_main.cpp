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


// redp: corpus generation, training, evaluation and experiments.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "redp/ad/checkpoint.hpp"
#include "redp/babi.hpp"
#include "redp/corpus.hpp"
#include "redp/error.hpp"
#include "redp/harness.hpp"
#include "redp/policy.hpp"
#include "redp/redp.hpp"
#include "redp/simuser.hpp"
#include "redp/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace redp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kManifestVersion = 1;

// Failure while reading an input file; reported with the IO exit code.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoFailure:
    case ErrorKind::kCorruptBundle:
      return kExitIo;
    case ErrorKind::kNumericFailure:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

class Manifest {
 public:
  explicit Manifest(std::vector<std::string> argv)
      : argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  // Reads a file and records its checksum.
  std::string read_input(const fs::path& path) {
    std::string text;
    try {
      text = util::read_file(path);
    } catch (const Error& e) {
      throw InputError(e.what());
    }
    inputs_[path.string()] = util::hex64(util::fnv1a64(text));
    return text;
  }

  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void config(json value) { config_ = std::move(value); }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }

  void write(const fs::path& path) const {
    json doc;
    doc["format"] = "redp-run-manifest";
    doc["version"] = kManifestVersion;
    doc["command"] = util::join(argv_, " ");
    doc["argv"] = argv_;
    doc["config"] = config_;
    doc["seeds"] = seeds_;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    doc["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc["formats"] = {{"checkpoint", ad::kCheckpointVersion},
                      {"attention", harness::kAttentionSchemaVersion},
                      {"manifest", kManifestVersion}};
    util::write_file_atomic(path, doc.dump(2) + "\n");
  }

 private:
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

// Shared state of one invocation.
struct Context {
  Manifest manifest;
  fs::path out;

  void write(const fs::path& name, const std::string& contents) {
    const fs::path path = out / name;
    util::write_file_atomic(path, contents);
    manifest.output(path);
  }

  void finish() {
    const fs::path path = out / "manifest.json";
    manifest.write(path);
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("REDP_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError("REDP_SEED must be an unsigned integer");
    return v;
  }
  return fallback;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

json parse_json_input(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

harness::PolicyConfigs load_configs(Context& ctx, const std::string& config_path,
                                    harness::PolicyKind kind) {
  harness::PolicyConfigs cfg;
  if (config_path.empty()) return cfg;
  const json doc = parse_json_input(ctx.manifest.read_input(config_path), config_path);
  if (kind == harness::PolicyKind::kRedp)
    cfg.redp = model::RedpConfig::from_json(doc);
  else
    cfg.lstm = baseline::BaselineConfig::from_json(doc);
  return cfg;
}

json config_snapshot(const harness::PolicyConfigs& cfg, harness::PolicyKind kind) {
  return kind == harness::PolicyKind::kRedp ? cfg.redp.to_json() : cfg.lstm.to_json();
}

corpus::DomainSpec load_domain(Context& ctx, const std::string& path) {
  const std::string text = ctx.manifest.read_input(path);
  try {
    return corpus::parse_domain(text);
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::vector<corpus::Dialogue> load_stories(Context& ctx, const std::vector<std::string>& paths,
                                           const corpus::DomainSpec& spec) {
  std::vector<corpus::Dialogue> all;
  for (const auto& p : paths) {
    const std::string text = ctx.manifest.read_input(p);
    try {
      auto ds = corpus::expand_listen(corpus::parse_stories(text, spec));
      all.insert(all.end(), ds.begin(), ds.end());
    } catch (const Error& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  return all;
}

std::unique_ptr<policy::Policy> load_checkpoint(Context& ctx, const std::string& path) {
  const std::string text = ctx.manifest.read_input(path);
  try {
    return harness::policy_from_checkpoint(ad::parse_checkpoint(text));
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

harness::ExperimentData bundled_data(Context& ctx, std::uint64_t corpus_seed) {
  const fs::path dir = sim::default_bundle_dir();
  ctx.manifest.read_input(dir / std::string(sim::kBundleManifest));
  harness::ExperimentOptions opts;
  opts.seed = corpus_seed;
  ctx.manifest.seed("corpus", corpus_seed);
  return harness::build_experiment_data(sim::handcrafted_corpora(dir), opts);
}

std::vector<std::size_t> parse_fractions(const std::string& text) {
  if (text.empty()) return harness::kDefaultFractions;
  std::vector<std::size_t> out;
  for (const auto& part : util::split(text, ',')) {
    const std::string p(util::trim(part));
    char* end = nullptr;
    const unsigned long v = std::strtoul(p.c_str(), &end, 10);
    if (p.empty() || *end != '\0') throw UsageError("bad fraction '" + p + "'");
    out.push_back(v);
  }
  return out;
}

std::string eval_line(const harness::EvalReport& r) {
  std::ostringstream os;
  os << r.n_fully_correct << "/" << r.n_dialogues << " dialogues fully correct (accuracy "
     << std::fixed << std::setprecision(4) << r.accuracy() << ")";
  return os.str();
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string domain = "hotel";
  std::size_t n = 120;
  std::optional<std::uint64_t> seed;
  int max_turns = 12;
  std::string out;
  bool bundle = false;
  std::string bootstrap;
};

int cmd_generate(const GenerateArgs& a, Manifest manifest) {
  if (a.bundle) {
    Context ctx{std::move(manifest), a.out};
    ensure_dir(ctx.out);
    const std::uint64_t seed = resolve_seed(a.seed, 2018);
    ctx.manifest.seed("bundle", seed);
    if (!fs::exists(ctx.out / "values.json"))
      throw InputError("bundle directory needs values.json: " + (ctx.out / "values.json").string());
    ctx.manifest.read_input(ctx.out / "values.json");
    for (const auto& name : sim::write_bundle(ctx.out, seed)) ctx.manifest.output(ctx.out / name);
    ctx.finish();
    std::cout << "wrote bundle to " << ctx.out.string() << "\n";
    return 0;
  }
  const sim::TaskSpec task = [&] {
    try {
      return sim::task_by_name(a.domain);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  if (a.n == 0) throw UsageError("--n must be positive");
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  manifest.seed("generate", seed);
  const fs::path bundle = sim::default_bundle_dir();
  manifest.read_input(bundle / "values.json");
  const sim::ValueTable values = sim::load_values(bundle);
  const corpus::DomainSpec spec = sim::task_domain(task);

  std::vector<corpus::Dialogue> dialogues;
  json cfg = {{"domain", a.domain}, {"n", a.n}, {"max_turns", a.max_turns}};
  if (!a.bootstrap.empty()) {
    Context tmp{Manifest({}), {}};
    auto proposer_policy = load_checkpoint(tmp, a.bootstrap);
    manifest.read_input(a.bootstrap);
    auto [ds, fixed] = sim::generate_bootstrapped(
        task, a.n, a.max_turns, seed, values,
        [&](const corpus::Dialogue& prefix) {
          return policy::predict(*proposer_policy, prefix).action;
        });
    dialogues = std::move(ds);
    cfg["bootstrap_labels_fixed"] = fixed;
    std::cerr << "bootstrap: " << fixed << " labels fixed by the oracle\n";
  } else {
    dialogues = sim::generate_dialogues(task, a.n, a.max_turns, seed, values);
  }
  manifest.config(cfg);

  fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  util::write_file_atomic(out, corpus::serialize_stories(dialogues));
  manifest.output(out);
  fs::path domain_path = out;
  domain_path += ".domain.json";
  util::write_file_atomic(domain_path, corpus::serialize_domain(spec));
  manifest.output(domain_path);
  fs::path manifest_path = out;
  manifest_path += ".manifest.json";
  manifest.write(manifest_path);
  std::cout << "wrote " << dialogues.size() << " dialogues to " << out.string() << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string policy = "redp";
  std::vector<std::string> data;
  std::string domain;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant = "d1";
  std::size_t fraction = 78;
  std::uint64_t corpus_seed = 7;
  std::string out;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, Context ctx) {
  const harness::PolicyKind kind = harness::parse_kind(a.policy);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  ctx.manifest.seed("model", seed);
  harness::PolicyConfigs cfg = load_configs(ctx, a.config, kind);

  corpus::DomainSpec spec;
  std::vector<corpus::Dialogue> dialogues;
  if (!a.data.empty()) {
    if (a.domain.empty()) throw UsageError("--data requires --domain");
    spec = load_domain(ctx, a.domain);
    dialogues = load_stories(ctx, a.data, spec);
  } else {
    if (!a.domain.empty()) throw UsageError("--domain requires --data");
    const auto data = bundled_data(ctx, a.corpus_seed);
    const auto variant = harness::parse_variant(a.variant);
    spec = harness::variant_domain(data, variant);
    dialogues = harness::training_set(data, variant, a.fraction, seed);
  }
  ensure_dir(ctx.out);
  auto policy = harness::make_policy(kind, spec, cfg, seed);
  ctx.manifest.config(policy->config_json());

  json epochs = json::array();
  const auto log = harness::train_policy(*policy, dialogues, [&](const policy::EpochLog& e) {
    epochs.push_back({{"epoch", e.epoch},
                      {"mean_loss", e.mean_loss},
                      {"action_accuracy", e.action_accuracy},
                      {"sequence_accuracy", e.sequence_accuracy}});
    if (!a.quiet && (e.epoch % 25 == 0 || e.epoch == 1))
      std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << " action_acc "
                << e.action_accuracy << "\n";
  });
  ctx.write("checkpoint.json", ad::serialize_checkpoint(harness::policy_checkpoint(*policy)));
  json log_doc = {{"policy", policy->kind()},
                  {"dialogues", dialogues.size()},
                  {"reached_full_accuracy", log.reached_full_accuracy},
                  {"epochs", epochs}};
  ctx.write("train_log.json", log_doc.dump(2) + "\n");
  ctx.finish();
  const auto& last = log.epochs.back();
  std::cout << policy->kind() << ": " << log.epochs.size() << " epochs on " << dialogues.size()
            << " dialogues, training action accuracy " << last.action_accuracy << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> data;
  bool free_running = false;
  std::uint64_t corpus_seed = 7;
  std::string out;
};

int cmd_eval(const EvalArgs& a, Context ctx) {
  auto policy = load_checkpoint(ctx, a.checkpoint);
  std::vector<corpus::Dialogue> test;
  if (!a.data.empty()) {
    test = load_stories(ctx, a.data, policy->domain());
  } else {
    test = bundled_data(ctx, a.corpus_seed).hotel_test;
  }
  const auto report = harness::eval_accuracy(*policy, test, a.free_running);
  ensure_dir(ctx.out);
  ctx.manifest.config({{"free_running", a.free_running}, {"policy", policy->config_json()}});
  ctx.write("eval_report.json", report.to_json().dump(2) + "\n");
  ctx.finish();
  std::cout << eval_line(report) << "\n";
  return 0;
}

// ---- curve / ablate --------------------------------------------------------

struct CurveArgs {
  std::string policy = "redp";
  std::string variant = "d1";
  std::size_t runs = 5;
  std::string fractions;
  std::string config;
  std::string arms;
  std::optional<std::uint64_t> seed;
  std::uint64_t corpus_seed = 7;
  unsigned jobs = 0;
  std::string out;
};

harness::CurveOptions curve_options(const CurveArgs& a, Context& ctx, harness::PolicyKind kind) {
  harness::CurveOptions opt;
  opt.kind = kind;
  opt.variant = harness::parse_variant(a.variant);
  opt.fractions = parse_fractions(a.fractions);
  if (a.runs == 0) throw UsageError("--runs must be positive");
  opt.runs = a.runs;
  opt.seed = resolve_seed(a.seed, 0);
  opt.jobs = a.jobs;
  opt.configs = load_configs(ctx, a.config, kind);
  opt.on_run = [](std::size_t f, std::size_t r, double acc) {
    std::cerr << "  fraction " << f << " run " << r << " accuracy " << acc << "\n";
  };
  ctx.manifest.seed("experiment", opt.seed);
  return opt;
}

int cmd_curve(const CurveArgs& a, Context ctx) {
  const auto kind = harness::parse_kind(a.policy);
  auto opt = curve_options(a, ctx, kind);
  const auto data = bundled_data(ctx, a.corpus_seed);
  ensure_dir(ctx.out);
  ctx.manifest.config({{"policy", a.policy},
                       {"variant", a.variant},
                       {"runs", a.runs},
                       {"fractions", opt.fractions},
                       {"model", config_snapshot(opt.configs, kind)}});
  const auto curve = harness::learning_curve(data, opt);
  json doc = {{"policy", a.policy}, {"variant", a.variant}, {"points", json::array()}};
  for (const auto& p : curve) doc["points"].push_back(p.to_json());
  const std::string title = a.policy + " on " + a.variant;
  const std::string table = harness::format_curve(title, curve);
  ctx.write("curve.json", doc.dump(2) + "\n");
  ctx.write("curve.txt", table);
  ctx.finish();
  std::cout << table;
  return 0;
}

int cmd_ablate(const CurveArgs& a, Context ctx) {
  auto opt = curve_options(a, ctx, harness::PolicyKind::kRedp);
  std::vector<harness::AblationArm> arms = harness::default_arms();
  if (!a.arms.empty()) {
    std::vector<harness::AblationArm> chosen;
    for (const auto& name : util::split(a.arms, ',')) {
      auto it = std::find_if(arms.begin(), arms.end(),
                             [&](const auto& arm) { return arm.name == util::trim(name); });
      if (it == arms.end()) {
        std::string valid;
        for (const auto& arm : arms) valid += (valid.empty() ? "" : ", ") + arm.name;
        throw UsageError("unknown arm '" + std::string(name) + "' (valid: " + valid + ")");
      }
      chosen.push_back(*it);
    }
    arms = chosen;
  }
  const auto data = bundled_data(ctx, a.corpus_seed);
  ensure_dir(ctx.out);
  json arm_names = json::array();
  for (const auto& arm : arms) arm_names.push_back(arm.name);
  ctx.manifest.config({{"arms", arm_names},
                       {"runs", a.runs},
                       {"fractions", opt.fractions},
                       {"model", opt.configs.redp.to_json()}});
  const auto rows = harness::ablation(data, arms, opt);
  json doc = {{"rows", json::array()}};
  std::string table;
  for (const auto& row : rows) {
    json r = {{"arm", row.arm.name}, {"points", json::array()}};
    for (const auto& p : row.curve) r["points"].push_back(p.to_json());
    doc["rows"].push_back(r);
    table += harness::format_curve(row.arm.name, row.curve);
  }
  ctx.write("ablation.json", doc.dump(2) + "\n");
  ctx.write("ablation.txt", table);
  ctx.finish();
  std::cout << table;
  return 0;
}

// ---- babi ------------------------------------------------------------------

struct BabiArgs {
  std::string task5;
  std::string inventory;
  std::size_t synthesize = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_babi(const BabiArgs& a, Context ctx) {
  ensure_dir(ctx.out);
  if (a.synthesize > 0) {
    if (!a.task5.empty()) throw UsageError("--synthesize and --task5 are exclusive");
    const std::uint64_t seed = resolve_seed(a.seed, 0);
    ctx.manifest.seed("synthesize", seed);
    ctx.manifest.config({{"synthesize", a.synthesize}});
    ctx.write("task5.txt", babi::synthesize(a.synthesize, seed));
    ctx.finish();
    std::cout << "wrote " << a.synthesize << " dialogues to " << (ctx.out / "task5.txt").string()
              << "\n";
    return 0;
  }
  if (a.task5.empty()) throw UsageError("babi needs --task5 <file> or --synthesize <n>");
  const fs::path inv_path = a.inventory.empty() ? babi::default_inventory_path()
                                                : fs::path(a.inventory);
  const std::string inv_text = ctx.manifest.read_input(inv_path);
  const std::string text = ctx.manifest.read_input(a.task5);
  babi::BabiCorpus corp;
  try {
    corp = babi::ingest(text, babi::parse_inventory(inv_text));
  } catch (const Error& e) {
    throw InputError(a.task5 + ": " + e.what());
  }
  ctx.manifest.config({{"inventory", inv_path.string()}});
  ctx.write("domain.json", corpus::serialize_domain(corp.domain));
  ctx.write("dialogues.stories", corpus::serialize_stories(corp.dialogues));
  ctx.finish();
  std::cout << "converted " << corp.dialogues.size() << " dialogues\n";
  return 0;
}

// ---- export-attention ------------------------------------------------------

struct AttentionArgs {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string dialogue;
  std::uint64_t corpus_seed = 7;
  std::string out;
};

int cmd_export_attention(const AttentionArgs& a, Context ctx) {
  auto policy = load_checkpoint(ctx, a.checkpoint);
  const auto* redp_policy = dynamic_cast<const model::RedpPolicy*>(policy.get());
  if (!redp_policy) throw UsageError("export-attention needs a redp checkpoint");
  std::vector<corpus::Dialogue> dialogues;
  if (!a.data.empty())
    dialogues = load_stories(ctx, a.data, policy->domain());
  else
    dialogues = bundled_data(ctx, a.corpus_seed).hotel_test;
  ensure_dir(ctx.out);
  std::size_t written = 0;
  for (const auto& d : dialogues) {
    if (!a.dialogue.empty() && d.name != a.dialogue) continue;
    const auto records = harness::attention_trace(*redp_policy, d);
    ctx.write("attention_" + d.name + ".json", harness::attention_json(records, d.name));
    ++written;
  }
  if (written == 0) throw UsageError("no dialogue named '" + a.dialogue + "'");
  ctx.manifest.config({{"dialogue", a.dialogue}});
  ctx.finish();
  std::cout << "wrote " << written << " attention file(s)\n";
  return 0;
}

// ---- chat ------------------------------------------------------------------

std::string format_weights(const std::vector<double>& w) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "[";
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? " " : "") << w[i];
  os << "]";
  return os.str();
}

int cmd_chat(const std::string& checkpoint, std::size_t max_actions) {
  Context ctx{Manifest({}), {}};
  auto policy = load_checkpoint(ctx, checkpoint);
  const corpus::DomainSpec& spec = policy->domain();
  std::cout << "loaded " << policy->kind() << "; type intent{\"entity\": \"value\"}, "
            << ":trace, :reset or :quit\n";
  corpus::Dialogue dialogue{"chat", {}};
  bool trace = false;
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    const std::string_view input = util::trim(line);
    if (input.empty()) continue;
    if (input == ":quit") return 0;
    if (input == ":trace") {
      trace = !trace;
      std::cout << "trace " << (trace ? "on" : "off") << "\n";
      continue;
    }
    if (input == ":reset") {
      dialogue.steps.clear();
      continue;
    }
    corpus::UserTurn turn;
    try {
      const auto parsed = corpus::parse_stories("## chat\n* " + std::string(input) + "\n", spec);
      turn = std::get<corpus::UserTurn>(parsed.at(0).steps.at(0));
    } catch (const std::exception& e) {
      std::string msg = e.what();
      if (auto pos = msg.find("line 2: "); pos != std::string::npos) msg.erase(pos, 8);
      std::cout << "error: " << msg << "\n";
      continue;
    }
    dialogue.steps.emplace_back(turn);
    for (std::size_t i = 0; i < max_actions; ++i) {
      const auto pred = policy::predict(*policy, dialogue);
      std::cout << "  " << pred.action << "\n";
      if (trace) {
        const auto& s = pred.steps.back();
        if (!s.user_alignment.empty())
          std::cout << "    user   " << format_weights(s.user_alignment) << "\n";
        if (!s.system_alignment.empty())
          std::cout << "    system " << format_weights(s.system_alignment) << "\n";
      }
      dialogue.steps.emplace_back(corpus::ActionStep{pred.action});
      if (pred.action == corpus::kActionListen) break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"REDP dialogue policies: corpora, training, evaluation and experiments"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate simulated dialogues or the data bundle");
  g->add_option("--domain", gen.domain, "hotel or restaurant")->capture_default_str();
  g->add_option("--n", gen.n, "number of dialogues")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed (default: REDP_SEED, else 0)");
  g->add_option("--max-turns", gen.max_turns, "user-turn cap")->capture_default_str();
  g->add_option("--bootstrap", gen.bootstrap,
                "checkpoint proposing actions; wrong labels are replaced by the oracle");
  g->add_flag("--bundle", gen.bundle, "rewrite the data bundle in --out (needs values.json)");
  g->add_option("--out", gen.out, "stories file, or bundle directory with --bundle")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a policy");
  t->add_option("--policy", tr.policy, "redp, lstm_bin or lstm_lt")->capture_default_str();
  t->add_option("--data", tr.data, "story files (default: bundled experiment data)");
  t->add_option("--domain", tr.domain, "domain file for --data");
  t->add_option("--config", tr.config, "JSON object overriding policy hyperparameters");
  t->add_option("--seed", tr.seed, "model seed (default: REDP_SEED, else 0)");
  t->add_option("--variant", tr.variant, "bundled variant d1 or d2")->capture_default_str();
  t->add_option("--fraction", tr.fraction, "bundled uncooperative dialogues")
      ->capture_default_str();
  t->add_option("--corpus-seed", tr.corpus_seed, "bundled corpus seed")->capture_default_str();
  t->add_flag("--quiet", tr.quiet, "no per-epoch progress");
  t->add_option("--out", tr.out, "output directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  e->add_option("--data", ev.data, "story files (default: bundled hotel test set)");
  e->add_flag("--free-running", ev.free_running, "feed predictions back instead of labels");
  e->add_option("--corpus-seed", ev.corpus_seed, "bundled corpus seed")->capture_default_str();
  e->add_option("--out", ev.out, "output directory")->required();

  CurveArgs cu;
  auto* c = app.add_subcommand("curve", "Learning curve over training-set sizes");
  c->add_option("--policy", cu.policy, "redp, lstm_bin or lstm_lt")->capture_default_str();
  c->add_option("--variant", cu.variant, "d1 or d2")->capture_default_str();
  c->add_option("--runs", cu.runs, "runs per fraction")->capture_default_str();
  c->add_option("--fractions", cu.fractions, "comma-separated dialogue counts");
  c->add_option("--config", cu.config, "JSON object overriding policy hyperparameters");
  c->add_option("--seed", cu.seed, "experiment seed (default: REDP_SEED, else 0)");
  c->add_option("--corpus-seed", cu.corpus_seed, "bundled corpus seed")->capture_default_str();
  c->add_option("--jobs", cu.jobs, "worker threads (0: all processors)")->capture_default_str();
  c->add_option("--out", cu.out, "output directory")->required();

  CurveArgs ab;
  ab.runs = 3;
  auto* a = app.add_subcommand("ablate", "REDP attention ablation on d1");
  a->add_option("--runs", ab.runs, "runs per fraction")->capture_default_str();
  a->add_option("--fractions", ab.fractions, "comma-separated dialogue counts");
  a->add_option("--arms", ab.arms, "comma-separated arms (default: all)");
  a->add_option("--config", ab.config, "JSON object overriding REDP hyperparameters");
  a->add_option("--seed", ab.seed, "experiment seed (default: REDP_SEED, else 0)");
  a->add_option("--corpus-seed", ab.corpus_seed, "bundled corpus seed")->capture_default_str();
  a->add_option("--jobs", ab.jobs, "worker threads (0: all processors)")->capture_default_str();
  a->add_option("--out", ab.out, "output directory")->required();

  BabiArgs bb;
  auto* b = app.add_subcommand("babi", "Convert or synthesize restaurant-reservation dialogues");
  b->add_option("--task5", bb.task5, "dialogue file in bAbI line format");
  b->add_option("--inventory", bb.inventory, "template inventory (default: bundled)");
  b->add_option("--synthesize", bb.synthesize, "write this many generated dialogues instead");
  b->add_option("--seed", bb.seed, "generator seed (default: REDP_SEED, else 0)");
  b->add_option("--out", bb.out, "output directory")->required();

  AttentionArgs at;
  auto* x = app.add_subcommand("export-attention", "Write attention traces of a REDP checkpoint");
  x->add_option("--checkpoint", at.checkpoint, "REDP checkpoint")->required();
  x->add_option("--data", at.data, "story files (default: bundled hotel test set)");
  x->add_option("--dialogue", at.dialogue, "only this dialogue");
  x->add_option("--corpus-seed", at.corpus_seed, "bundled corpus seed")->capture_default_str();
  x->add_option("--out", at.out, "output directory")->required();

  std::string chat_ckpt;
  std::size_t chat_max = 10;
  auto* ch = app.add_subcommand("chat", "Interactive session with a trained policy");
  ch->add_option("--checkpoint", chat_ckpt, "checkpoint file")->required();
  ch->add_option("--max-actions", chat_max, "actions per user turn")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    Manifest manifest(args);
    if (g->parsed()) return cmd_generate(gen, std::move(manifest));
    if (t->parsed()) return cmd_train(tr, {std::move(manifest), tr.out});
    if (e->parsed()) return cmd_eval(ev, {std::move(manifest), ev.out});
    if (c->parsed()) return cmd_curve(cu, {std::move(manifest), cu.out});
    if (a->parsed()) return cmd_ablate(ab, {std::move(manifest), ab.out});
    if (b->parsed()) return cmd_babi(bb, {std::move(manifest), bb.out});
    if (x->parsed()) return cmd_export_attention(at, {std::move(manifest), at.out});
    if (ch->parsed()) return cmd_chat(chat_ckpt, chat_max);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err.kind());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
