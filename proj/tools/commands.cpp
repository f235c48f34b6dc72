#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/data/dqn.hpp"
#include "exid/data/generate.hpp"
#include "exid/data/reduction.hpp"
#include "exid/eval/diagnostics.hpp"
#include "exid/eval/evaluate.hpp"
#include "exid/eval/tabular.hpp"
#include "exid/knowledge/builtin_trees.hpp"
#include "exid/knowledge/dsl.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/teacher/teacher.hpp"
#include "exid/train/bc.hpp"
#include "exid/train/exid.hpp"
#include "manifest.hpp"

namespace exid::cli {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> train_config_keys() {
  std::vector<std::string> keys;
  std::istringstream in(train::TrainConfig{}.to_text());
  for (std::string line; std::getline(in, line);) keys.push_back(trim(line.substr(0, line.find('='))));
  return keys;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string piece; std::getline(ss, piece, ',');) {
    piece = trim(piece);
    if (piece.empty() || !std::all_of(piece.begin(), piece.end(), ::isdigit)) {
      throw UsageError("seeds must be a comma-separated list of non-negative integers, got '" + text + "'");
    }
    seeds.push_back(std::stoull(piece));
  }
  if (seeds.empty()) throw UsageError("at least one seed is required");
  return seeds;
}

void require_env_id(const std::string& env_id) {
  if (!is_supported_env(env_id)) {
    std::string ids;
    for (const auto& id : supported_env_ids()) ids += (ids.empty() ? "" : ", ") + id;
    throw UsageError("unknown environment '" + env_id + "' (supported: " + ids + ")");
  }
}

knowledge::DecisionTree load_tree(const std::string& tree_path, const std::string& env_id) {
  if (tree_path.empty()) return knowledge::builtin_tree(env_id);
  const knowledge::Vocabulary vocabulary = knowledge::Vocabulary::for_env(env_spec(env_id));
  knowledge::DecisionTree tree = knowledge::parse_tree(read_text(tree_path), &vocabulary);
  if (tree.env_id() != env_id) {
    throw EnvMismatchError("tree '" + tree_path + "' is for '" + tree.env_id() + "', expected '" + env_id + "'");
  }
  return tree;
}

std::optional<knowledge::Predicate> parse_region(const std::string& text, const std::string& env_id) {
  if (text.empty()) return std::nullopt;
  return knowledge::parse_predicate(text, knowledge::Vocabulary::for_env(env_spec(env_id)));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

/// Shared state of one invocation: the manifest under construction and where it goes.
struct Run {
  RunManifest manifest;
  fs::path manifest_path;
  std::ostream* out = nullptr;

  void finish() {
    manifest.finished_at = utc_timestamp();
    if (!manifest_path.empty()) manifest.save(manifest_path);
  }
};

fs::path default_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

// ---------------------------------------------------------------------------------------------

struct GenDataArgs {
  std::string env_id;
  std::string kind = "expert";
  long n = 100000;
  std::uint64_t seed = 0;
  double epsilon = 0.2;
  std::string out;
  std::string policy;
  std::string save_policy;
  long dqn_steps = 0;
};

void cmd_gen_data(const GenDataArgs& a, Run& run) {
  require_env_id(a.env_id);
  const data::DatasetKind kind = data::parse_kind(a.kind);
  if (a.n <= 0) throw UsageError("--n must be positive");
  if (a.out.empty()) throw UsageError("--out is required");
  if (kind == data::DatasetKind::replay && !a.policy.empty()) {
    throw UsageError("replay data comes from an online training log; --policy cannot be used with --kind replay");
  }
  run.manifest.env_id = a.env_id;
  run.manifest.seeds = {a.seed};

  std::optional<data::QPolicy> policy;
  std::vector<data::Transition> log;
  if (!a.policy.empty()) {
    policy = data::load_q_policy(a.policy, a.env_id);
    run.manifest.add_input("q_policy", a.policy);
  } else {
    data::DqnConfig cfg = data::DqnConfig::defaults_for(a.env_id);
    if (a.dqn_steps > 0) cfg.total_steps = a.dqn_steps;
    data::DqnResult trained = data::train_online_dqn(a.env_id, cfg, a.seed);
    policy = std::move(trained.policy);
    log = std::move(trained.log);
  }

  const auto n = static_cast<std::size_t>(a.n);
  data::Dataset dataset;
  switch (kind) {
    case data::DatasetKind::expert: dataset = data::generate_expert(*policy, n, a.seed); break;
    case data::DatasetKind::noisy: dataset = data::generate_noisy(*policy, a.epsilon, n, a.seed); break;
    case data::DatasetKind::replay: dataset = data::generate_replay(a.env_id, log, n, a.seed); break;
  }
  ensure_parent(a.out);
  data::save_dataset(a.out, dataset);
  run.manifest.add_output("dataset", a.out);
  if (!a.save_policy.empty()) {
    ensure_parent(a.save_policy);
    data::save_q_policy(a.save_policy, *policy);
    run.manifest.add_output("q_policy", a.save_policy);
  }
  *run.out << "wrote " << dataset.size() << " " << a.kind << " transitions to " << a.out;
  if (dataset.meta.source_score) *run.out << " (source policy return " << format_double(*dataset.meta.source_score) << ")";
  *run.out << "\n";
}

// ---------------------------------------------------------------------------------------------

struct ReduceArgs {
  std::string in;
  std::string out;
  double fraction = 0.1;
  std::string remove;
  std::string take = "first";
  std::uint64_t seed = 0;
  int bins = 64;
  std::string report;
};

int cmd_reduce(const ReduceArgs& a, Run& run) {
  if (a.in.empty() || a.out.empty()) throw UsageError("--in and --out are required");
  const data::Dataset full = data::load_dataset(a.in);
  run.manifest.env_id = full.env_id;
  run.manifest.seeds = {a.seed};
  run.manifest.add_input("dataset", a.in);

  data::ReductionSpec spec;
  spec.fraction = a.fraction;
  spec.removal = parse_region(a.remove, full.env_id);
  if (a.take == "first") spec.take = data::TakeMode::first;
  else if (a.take == "random") spec.take = data::TakeMode::random;
  else throw UsageError("--take must be 'first' or 'random'");
  spec.seed = a.seed;

  const data::Dataset reduced = data::reduce(full, spec);
  const data::ReductionReport report = data::verify_reduced(full, reduced, a.bins);
  const fs::path report_path = a.report.empty() ? fs::path(a.out + ".report.txt") : fs::path(a.report);
  std::string text = report.summary() + "\n";
  for (const auto& v : report.violations()) text += "violation: " + v + "\n";
  write_text(report_path, text);
  run.manifest.add_output("report", report_path);
  *run.out << text;
  if (!report.ok()) {
    *run.out << "reduced buffer rejected; nothing written to " << a.out << "\n";
    return kFailure;
  }
  ensure_parent(a.out);
  data::save_dataset(a.out, reduced);
  run.manifest.add_output("dataset", a.out);
  *run.out << "wrote " << reduced.size() << " of " << full.size() << " transitions to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------

struct TeacherArgs {
  std::string env_id;
  std::string tree;
  long n = 50000;
  std::uint64_t seed = 0;
  std::string out;
  std::string hidden;
  double lr = 0.0;
  int max_epochs = 0;
  std::string loss_log;
};

void cmd_train_teacher(const TeacherArgs& a, Run& run) {
  require_env_id(a.env_id);
  if (a.out.empty()) throw UsageError("--out is required");
  if (a.n <= 0) throw UsageError("--n must be positive");
  run.manifest.env_id = a.env_id;
  run.manifest.seeds = {a.seed};
  const knowledge::DecisionTree tree = load_tree(a.tree, a.env_id);
  if (!a.tree.empty()) run.manifest.add_input("tree", a.tree);

  teacher::TeacherConfig cfg;
  if (!a.hidden.empty()) {
    train::TrainConfig scratch;
    scratch.set("hidden", a.hidden);
    cfg.hidden = scratch.hidden;
  }
  if (a.lr > 0.0) cfg.lr = a.lr;
  if (a.max_epochs > 0) cfg.max_epochs = a.max_epochs;

  Rng rng = make_rng(a.seed, "teacher.states");
  const auto states = teacher::sample_synthetic_states(a.env_id, static_cast<std::size_t>(a.n), rng);
  const teacher::TeacherPolicy t = teacher::train_teacher_bc(tree, states, cfg, a.seed);
  ensure_parent(a.out);
  teacher::save_teacher(a.out, t);
  run.manifest.add_output("teacher", a.out);
  if (!a.loss_log.empty()) {
    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t i = 0; i < t.loss_curve.size(); ++i) csv << i + 1 << ',' << format_double(t.loss_curve[i]) << '\n';
    write_text(a.loss_log, csv.str());
    run.manifest.add_output("log", a.loss_log);
  }
  *run.out << "teacher trained on " << t.sample_count << " states, held-out agreement "
           << format_double(t.holdout_agreement) << ", wrote " << a.out << "\n";
}

// ---------------------------------------------------------------------------------------------

struct TrainArgs {
  std::string algo = "exid";
  std::string data;
  std::string teacher;
  std::string tree;
  std::string out;
  std::string log;
  std::string eval_log;
  std::string teacher_out;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> overrides;  // TrainConfig keys
};

void cmd_train(const TrainArgs& a, Run& run) {
  if (a.data.empty() || a.out.empty()) throw UsageError("--data and --out are required");
  if (a.algo != "exid" && a.algo != "cql" && a.algo != "bc") throw UsageError("--algo must be exid, cql or bc");
  if (a.algo == "exid" && a.teacher.empty()) throw UsageError("--algo exid needs --teacher");

  const data::Dataset dataset = data::load_dataset(a.data);
  run.manifest.env_id = dataset.env_id;
  run.manifest.seeds = {a.seed};
  run.manifest.add_input("dataset", a.data);

  train::TrainConfig cfg = train::TrainConfig::defaults_for(dataset.env_id, dataset.kind);
  for (const auto& [key, value] : a.overrides) cfg.set(key, value);
  cfg.validate();

  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log);
  ensure_parent(a.out);
  ensure_parent(log_path);

  if (a.algo == "bc") {
    const train::BcResult r = train::train_bc(dataset, cfg, a.seed);
    train::save_bc(a.out, r.policy);
    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) csv << i + 1 << ',' << format_double(r.epoch_loss[i]) << '\n';
    write_text(log_path, csv.str());
    run.manifest.add_output("checkpoint", a.out);
    run.manifest.add_output("log", log_path);
    *run.out << "bc trained for " << r.step_loss.size() << " steps, wrote " << a.out << "\n";
    return;
  }

  train::EvalHook hook;
  if (cfg.eval_every > 0) {
    const std::vector<std::uint64_t> seeds{derive_seed(a.seed, "train.eval")};
    hook = [&dataset, &cfg, seeds](const train::Critic& critic) {
      return eval::evaluate_policy(
                 dataset.env_id, [&critic](std::span<const double> s) { return critic.greedy_action(s); },
                 cfg.eval_episodes, seeds)
          .mean();
    };
  }

  train::ExidResult result = [&] {
    if (a.algo == "cql") return train::train_cql(dataset, cfg, a.seed, hook);
    const teacher::TeacherPolicy t = teacher::load_teacher(a.teacher, dataset.env_id);
    run.manifest.add_input("teacher", a.teacher);
    if (!a.tree.empty()) run.manifest.add_input("tree", a.tree);
    return train::train_exid(dataset, t, load_tree(a.tree, dataset.env_id), cfg, a.seed, hook);
  }();

  train::save_critic(a.out, result.critic);
  result.log.save_csv(log_path);
  run.manifest.add_output("checkpoint", a.out);
  run.manifest.add_output("log", log_path);
  if (cfg.eval_every > 0) {
    const fs::path eval_path = a.eval_log.empty() ? fs::path(a.out + ".eval.csv") : fs::path(a.eval_log);
    ensure_parent(eval_path);
    result.log.save_eval_csv(eval_path);
    run.manifest.add_output("eval_log", eval_path);
  }
  if (result.teacher) {
    const fs::path teacher_path = a.teacher_out.empty() ? fs::path(a.out + ".teacher") : fs::path(a.teacher_out);
    ensure_parent(teacher_path);
    teacher::save_teacher(teacher_path, *result.teacher);
    run.manifest.add_output("teacher", teacher_path);
  }
  *run.out << a.algo << " trained for " << result.log.steps() << " steps";
  if (result.teacher) *run.out << ", teacher updates " << result.log.teacher_updates.back();
  *run.out << ", wrote " << a.out << "\n";
}

// ---------------------------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string env_id;
  bool rule = false;
  std::string tree;
  int episodes = 10;
  std::string seeds = "1,2,3";
  bool fallback = false;
  std::string remove;
  std::string label;
  std::string out;
};

void cmd_eval(const EvalArgs& a, Run& run) {
  const std::vector<std::uint64_t> seeds = parse_seed_list(a.seeds);
  if (a.episodes < 1) throw UsageError("--episodes must be at least 1");
  if (a.out.empty()) throw UsageError("--out is required");
  run.manifest.seeds = seeds;

  eval::EvalReport report;
  if (a.rule) {
    if (!a.checkpoint.empty()) throw UsageError("--rule evaluates the tree alone; drop --checkpoint");
    require_env_id(a.env_id);
    run.manifest.env_id = a.env_id;
    if (!a.tree.empty()) run.manifest.add_input("tree", a.tree);
    report = eval::evaluate_rule(load_tree(a.tree, a.env_id), a.episodes, seeds, a.label.empty() ? "D" : a.label);
  } else {
    if (a.checkpoint.empty()) throw UsageError("--checkpoint (or --rule) is required");
    const nn::Checkpoint ckpt = nn::load_checkpoint(a.checkpoint);
    const auto env_it = ckpt.meta.find("env_id");
    const auto role_it = ckpt.meta.find("role");
    if (env_it == ckpt.meta.end() || role_it == ckpt.meta.end()) {
      throw UsageError("checkpoint '" + a.checkpoint + "' lacks env_id/role metadata");
    }
    const std::string env_id = env_it->second;
    const std::string role = role_it->second;
    if (!a.env_id.empty() && a.env_id != env_id) {
      throw EnvMismatchError("checkpoint is for '" + env_id + "', --env says '" + a.env_id + "'");
    }
    run.manifest.env_id = env_id;
    run.manifest.add_input(role, a.checkpoint);

    eval::PolicyFn policy;
    std::shared_ptr<void> keep_alive;
    if (role == "critic") {
      auto critic = std::make_shared<train::Critic>(train::load_critic(a.checkpoint, env_id));
      policy = [critic](std::span<const double> s) { return critic->greedy_action(s); };
    } else if (role == "bc") {
      auto bc = std::make_shared<train::BcPolicy>(train::load_bc(a.checkpoint, env_id));
      policy = [bc](std::span<const double> s) { return bc->act(s); };
    } else if (role == "teacher") {
      auto t = std::make_shared<teacher::TeacherPolicy>(teacher::load_teacher(a.checkpoint, env_id));
      policy = [t](std::span<const double> s) { return teacher::teacher_action(*t, s); };
    } else if (role == "q_policy") {
      auto q = std::make_shared<data::QPolicy>(data::load_q_policy(a.checkpoint, env_id));
      policy = [q](std::span<const double> s) { return q->act(s); };
    } else {
      throw UsageError("cannot evaluate a checkpoint with role '" + role + "'");
    }

    const std::string label = a.label.empty() ? (a.fallback ? role + "-D" : role) : a.label;
    if (a.fallback) {
      const auto removed = parse_region(a.remove, env_id);
      if (!removed) throw UsageError("--fallback needs --remove, the predicate that built the reduced buffer");
      if (!a.tree.empty()) run.manifest.add_input("tree", a.tree);
      const auto in_buffer = [pred = *removed](std::span<const double> s) { return !pred.holds(s); };
      report = eval::evaluate_with_fallback(env_id, policy, load_tree(a.tree, env_id), in_buffer, a.episodes, seeds,
                                            label);
    } else {
      report = eval::evaluate_policy(env_id, policy, a.episodes, seeds, label);
    }
  }
  ensure_parent(a.out);
  report.save_csv(a.out);
  run.manifest.add_output("eval", a.out);
  *run.out << report.label << ": mean " << format_double(report.mean()) << " std " << format_double(report.stddev())
           << " over " << report.episodes.size() << " episodes";
  if (report.fallback_steps() > 0) *run.out << " (" << report.fallback_steps() << " rule steps)";
  *run.out << "\n";
}

// ---------------------------------------------------------------------------------------------

struct DiagArgs {
  std::string checkpoint;
  std::string reference;
  std::string region;
  std::string out;
};

void cmd_diag(const DiagArgs& a, Run& run) {
  if (a.checkpoint.empty() || a.reference.empty() || a.out.empty()) {
    throw UsageError("--checkpoint, --reference and --out are required");
  }
  const data::Dataset reference = data::load_dataset(a.reference);
  const train::Critic critic = train::load_critic(a.checkpoint, reference.env_id);
  run.manifest.env_id = reference.env_id;
  run.manifest.add_input("critic", a.checkpoint);
  run.manifest.add_input("dataset", a.reference);
  const auto rows = eval::q_divergence(critic, reference, parse_region(a.region, reference.env_id));
  ensure_parent(a.out);
  eval::save_q_divergence_csv(a.out, rows, reference.obs_dim);
  run.manifest.add_output("q_divergence", a.out);
  *run.out << rows.size() << " states, mean |Q(s,a_expert) - Q(s,a_greedy)| "
           << format_double(eval::mean_abs_divergence(rows)) << "\n";
}

// ---------------------------------------------------------------------------------------------

int cmd_counterexample(const std::string& out_path, Run& run) {
  const eval::CounterexampleResult r = eval::run_counterexample();
  std::ostringstream text;
  eval::write_counterexample_report(text, r);
  *run.out << text.str();
  if (!out_path.empty()) {
    write_text(out_path, text.str());
    run.manifest.add_output("report", out_path);
  }
  return r.demonstrates_suboptimality() ? kOk : kFailure;
}

void cmd_tree(const std::string& env_id, const std::string& file, Run& run) {
  require_env_id(env_id);
  *run.out << knowledge::print_tree(load_tree(file, env_id)) << "\n";
}

/// Copies config-file values into options that were not given on the command line.
void apply_config(CLI::App& sub, const std::map<std::string, std::string>& config) {
  for (const auto& [key, value] : config) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

void check_config_keys(const CLI::App& app, const std::map<std::string, std::string>& config) {
  for (const auto& [key, value] : config) {
    bool known = false;
    for (const CLI::App* sub : app.get_subcommands({})) known |= sub->get_option_no_throw("--" + key) != nullptr;
    if (!known) throw UsageError("unknown config key '" + key + "'");
  }
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::istringstream in(read_text(path));
  std::map<std::string, std::string> values;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value' in " + path, line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key in " + path, line_no);
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Offline RL with domain knowledge on reduced buffers: data, teachers, training and evaluation."};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Flat 'key = value' file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  std::string manifest_override;
  app.add_option("--manifest", manifest_override, "Manifest path (default: <main output>.manifest.json)");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Train a behaviour policy online and write an offline dataset");
  gen_cmd->add_option("--env", gen.env_id, "Environment id")->required();
  gen_cmd->add_option("--kind", gen.kind, "expert, replay or noisy")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of transitions")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  gen_cmd->add_option("--epsilon", gen.epsilon, "Random-action probability for noisy data")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset file");
  gen_cmd->add_option("--policy", gen.policy, "Use this Q-policy checkpoint instead of training one");
  gen_cmd->add_option("--save-policy,--save_policy", gen.save_policy, "Also write the behaviour policy");
  gen_cmd->add_option("--dqn-steps,--dqn_steps", gen.dqn_steps, "Override the online training budget");

  ReduceArgs red;
  auto* red_cmd = app.add_subcommand("reduce", "Build and verify a reduced buffer");
  red_cmd->add_option("--in", red.in, "Full dataset");
  red_cmd->add_option("--out", red.out, "Reduced dataset");
  red_cmd->add_option("--fraction", red.fraction, "Fraction kept before state removal")->capture_default_str();
  red_cmd->add_option("--remove", red.remove, "Predicate over s; matching transitions are dropped");
  red_cmd->add_option("--take", red.take, "first or random")->capture_default_str();
  red_cmd->add_option("--seed", red.seed, "Seed for random take")->capture_default_str();
  red_cmd->add_option("--bins", red.bins, "Bins per dimension for state identity")->capture_default_str();
  red_cmd->add_option("--report", red.report, "Verification report (default: <out>.report.txt)");

  TeacherArgs tea;
  auto* tea_cmd = app.add_subcommand("train-teacher", "Distil a decision tree into a teacher network");
  tea_cmd->add_option("--env", tea.env_id, "Environment id")->required();
  tea_cmd->add_option("--tree", tea.tree, "Tree file (default: built-in tree)");
  tea_cmd->add_option("--n,--teacher-samples,--teacher_samples", tea.n, "Synthetic states")->capture_default_str();
  tea_cmd->add_option("--seed", tea.seed, "Root seed")->capture_default_str();
  tea_cmd->add_option("--out", tea.out, "Teacher checkpoint");
  tea_cmd->add_option("--teacher-hidden,--teacher_hidden", tea.hidden, "Hidden sizes, e.g. 256,256");
  tea_cmd->add_option("--teacher-bc-lr,--teacher_bc_lr", tea.lr, "Behaviour-cloning step size");
  tea_cmd->add_option("--max-epochs,--max_epochs", tea.max_epochs, "Epoch limit");
  tea_cmd->add_option("--loss-log,--loss_log", tea.loss_log, "CSV of the loss per epoch");

  TrainArgs trn;
  auto* trn_cmd = app.add_subcommand("train", "Offline training: exid, cql or bc");
  trn_cmd->add_option("--algo", trn.algo, "exid, cql or bc")->capture_default_str();
  trn_cmd->add_option("--data", trn.data, "Training dataset");
  trn_cmd->add_option("--teacher", trn.teacher, "Teacher checkpoint (exid)");
  trn_cmd->add_option("--tree", trn.tree, "Tree file (default: built-in tree)");
  trn_cmd->add_option("--out", trn.out, "Checkpoint");
  trn_cmd->add_option("--log", trn.log, "Training log CSV (default: <out>.log.csv)");
  trn_cmd->add_option("--eval-log,--eval_log", trn.eval_log, "Periodic evaluation CSV (default: <out>.eval.csv)");
  trn_cmd->add_option("--teacher-out,--teacher_out", trn.teacher_out, "Refined teacher (default: <out>.teacher)");
  trn_cmd->add_option("--seed", trn.seed, "Root seed")->capture_default_str();
  std::map<std::string, std::string> train_values;
  for (const std::string& key : train_config_keys()) {
    std::string names = "--" + key;
    if (key == "warm_start_k") names += ",--k";
    trn_cmd->add_option(names, train_values[key], "Training config '" + key + "'");
  }

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Online evaluation of a checkpoint or of the rule tree");
  ev_cmd->add_option("--checkpoint", ev.checkpoint, "critic, bc, teacher or q_policy checkpoint");
  ev_cmd->add_option("--env", ev.env_id, "Environment id (required with --rule)");
  ev_cmd->add_flag("--rule", ev.rule, "Evaluate the decision tree with random fallback");
  ev_cmd->add_option("--tree", ev.tree, "Tree file (default: built-in tree)");
  ev_cmd->add_option("--episodes", ev.episodes, "Episodes per seed")->capture_default_str();
  ev_cmd->add_option("--seeds", ev.seeds, "Comma-separated evaluation seeds")->capture_default_str();
  ev_cmd->add_flag("--fallback", ev.fallback, "Act with the tree on states outside the reduced buffer");
  ev_cmd->add_option("--remove", ev.remove, "Removal predicate of the reduced buffer (with --fallback)");
  ev_cmd->add_option("--label", ev.label, "Label in the CSV");
  ev_cmd->add_option("--out", ev.out, "Episode CSV");

  DiagArgs dg;
  auto* dg_cmd = app.add_subcommand("diag", "Q-divergence of a critic on reference states");
  dg_cmd->add_option("--checkpoint", dg.checkpoint, "Critic checkpoint");
  dg_cmd->add_option("--reference", dg.reference, "Dataset whose actions serve as the expert reference");
  dg_cmd->add_option("--region", dg.region, "Predicate selecting the states to report");
  dg_cmd->add_option("--out", dg.out, "CSV");

  std::string ce_out;
  auto* ce_cmd = app.add_subcommand("counterexample", "Tabular reduced-buffer counterexample");
  ce_cmd->add_option("--out", ce_out, "Also write the report here");

  std::string tree_env;
  std::string tree_file;
  auto* tree_cmd = app.add_subcommand("tree", "Print a decision tree in canonical form");
  tree_cmd->add_option("--env", tree_env, "Environment id")->required();
  tree_cmd->add_option("--file", tree_file, "Tree file (default: built-in tree)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  Run run;
  run.out = &out;
  run.manifest.started_at = utc_timestamp();
  run.manifest.arguments = args;
  run.manifest.config_path = config_path;
  CLI::App* sub = app.get_subcommands().front();
  run.manifest.command = sub->get_name();

  try {
    if (!config_path.empty()) {
      const auto config = read_config_file(config_path);
      check_config_keys(app, config);
      apply_config(*sub, config);
      run.manifest.add_input("config", config_path);
    }
    for (const auto& [key, value] : train_values) {
      if (trn_cmd->get_option("--" + key)->count() > 0) trn.overrides[key] = value;
    }

    int code = kOk;
    fs::path main_output;
    if (sub == gen_cmd) {
      main_output = gen.out;
      cmd_gen_data(gen, run);
    } else if (sub == red_cmd) {
      main_output = red.out;
      code = cmd_reduce(red, run);
    } else if (sub == tea_cmd) {
      main_output = tea.out;
      cmd_train_teacher(tea, run);
    } else if (sub == trn_cmd) {
      main_output = trn.out;
      cmd_train(trn, run);
    } else if (sub == ev_cmd) {
      main_output = ev.out;
      cmd_eval(ev, run);
    } else if (sub == dg_cmd) {
      main_output = dg.out;
      cmd_diag(dg, run);
    } else if (sub == ce_cmd) {
      main_output = ce_out;
      code = cmd_counterexample(ce_out, run);
    } else if (sub == tree_cmd) {
      cmd_tree(tree_env, tree_file, run);
    }
    if (!manifest_override.empty()) run.manifest_path = manifest_override;
    else if (!main_output.empty()) run.manifest_path = default_manifest(main_output);
    run.finish();
    return code;
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << "\n";
    return kFailure;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << "\n";
    return kFailure;
  } catch (const EmptyDatasetError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace exid::cli
