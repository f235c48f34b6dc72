#include "exid/eval/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/env/environment.hpp"

namespace exid::eval {

std::vector<double> EvalReport::rewards() const {
  std::vector<double> r;
  for (const auto& e : episodes) r.push_back(e.reward);
  return r;
}

double EvalReport::mean() const {
  if (episodes.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : episodes) s += e.reward;
  return s / static_cast<double>(episodes.size());
}

double EvalReport::stddev() const {
  if (episodes.empty()) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (const auto& e : episodes) s += (e.reward - m) * (e.reward - m);
  return std::sqrt(s / static_cast<double>(episodes.size()));
}

long EvalReport::total_steps() const {
  long n = 0;
  for (const auto& e : episodes) n += e.steps;
  return n;
}

long EvalReport::fallback_steps() const {
  long n = 0;
  for (const auto& e : episodes) n += e.fallback_steps;
  return n;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "label,seed,episode,reward,steps,fallback_steps\n";
  for (const auto& e : episodes) {
    out << label << ',' << e.seed << ',' << e.episode << ',' << format_double(e.reward) << ',' << e.steps << ','
        << e.fallback_steps << '\n';
  }
}

void EvalReport::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  write_csv(out);
}

namespace {

EvalReport run(const std::string& env_id, const PolicyFn& policy, const knowledge::DecisionTree* tree,
               const MembershipFn* in_buffer, int episodes, std::span<const std::uint64_t> seeds,
               const std::string& label) {
  if (episodes < 1) throw UsageError("evaluation needs at least one episode");
  if (seeds.empty()) throw UsageError("evaluation needs at least one seed");
  if (tree && tree->env_id() != env_id) throw EnvMismatchError("tree belongs to '" + tree->env_id() + "'");
  auto env = make_environment(env_id);
  EvalReport report{env_id, label, {seeds.begin(), seeds.end()}, {}};
  for (std::uint64_t seed : seeds) {
    const std::uint64_t reset_base = derive_seed(seed, "eval");
    Rng rule_rng = make_rng(seed, "eval.rule");
    for (int e = 0; e < episodes; ++e) {
      EpisodeRecord rec{seed, e, 0.0, 0, 0};
      Observation obs = env->reset(derive_seed(reset_base, static_cast<std::uint64_t>(e)));
      for (;;) {
        int action;
        if (tree && !(in_buffer && (*in_buffer)(obs))) {
          action = tree->rule_action(obs, rule_rng).action;
          ++rec.fallback_steps;
        } else {
          action = policy(obs);
        }
        const StepResult st = env->step(action);
        rec.reward += st.reward;
        ++rec.steps;
        if (st.done || st.truncated) break;
        obs = st.observation;
      }
      report.episodes.push_back(rec);
    }
  }
  return report;
}

}  // namespace

EvalReport evaluate_policy(const std::string& env_id, const PolicyFn& policy, int episodes,
                           std::span<const std::uint64_t> seeds, const std::string& label) {
  return run(env_id, policy, nullptr, nullptr, episodes, seeds, label);
}

EvalReport evaluate_with_fallback(const std::string& env_id, const PolicyFn& policy,
                                  const knowledge::DecisionTree& tree, const MembershipFn& in_buffer, int episodes,
                                  std::span<const std::uint64_t> seeds, const std::string& label) {
  return run(env_id, policy, &tree, &in_buffer, episodes, seeds, label);
}

EvalReport evaluate_rule(const knowledge::DecisionTree& tree, int episodes, std::span<const std::uint64_t> seeds,
                         const std::string& label) {
  const MembershipFn never = [](std::span<const double>) { return false; };
  return run(tree.env_id(), {}, &tree, &never, episodes, seeds, label);
}

}  // namespace exid::eval
