#include "exid/data/generate.hpp"

#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"

namespace exid::data {
namespace {

Dataset rollout(const QPolicy& policy, double epsilon, std::size_t n, std::uint64_t seed, DatasetKind kind) {
  if (n == 0) throw UsageError("dataset size must be positive");
  if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("epsilon must lie in [0, 1]");
  const EnvSpec& spec = env_spec(policy.env_id());
  auto env = make_environment(policy.env_id());
  Rng coin = make_rng(seed, "data.noise");
  const std::uint64_t env_seed = derive_seed(seed, "data.env");

  Dataset d;
  d.env_id = policy.env_id();
  d.kind = kind;
  d.obs_dim = spec.obs_dim;
  d.n_actions = spec.n_actions;
  d.meta.seed = seed;
  if (kind == DatasetKind::noisy) d.meta.epsilon = epsilon;
  d.transitions.reserve(n);

  std::uint64_t episode = 0;
  Observation obs = env->reset(derive_seed(env_seed, episode));
  double ret = 0.0;
  double returns = 0.0;
  int finished = 0;
  while (d.transitions.size() < n) {
    int action = policy.act(obs);
    if (epsilon > 0.0 && bernoulli(coin, epsilon)) action = uniform_int(coin, spec.n_actions);
    StepResult st = env->step(action);
    ret += st.reward;
    d.transitions.push_back(Transition{obs, action, st.reward, st.observation, st.done && !st.truncated});
    if (st.done || st.truncated) {
      returns += ret;
      ++finished;
      ret = 0.0;
      obs = env->reset(derive_seed(env_seed, ++episode));
    } else {
      obs = std::move(st.observation);
    }
  }
  if (finished > 0) d.meta.source_score = returns / finished;
  return d;
}

}  // namespace

Dataset generate_expert(const QPolicy& policy, std::size_t n, std::uint64_t seed) {
  return rollout(policy, 0.0, n, seed, DatasetKind::expert);
}

Dataset generate_noisy(const QPolicy& policy, double epsilon, std::size_t n, std::uint64_t seed) {
  return rollout(policy, epsilon, n, seed, DatasetKind::noisy);
}

Dataset generate_replay(const std::string& env_id, const std::vector<Transition>& log, std::size_t n,
                        std::uint64_t seed) {
  if (n == 0) throw UsageError("dataset size must be positive");
  if (n > log.size()) {
    throw UsageError("requested " + std::to_string(n) + " replay transitions but the training log holds only " +
                     std::to_string(log.size()));
  }
  const EnvSpec& spec = env_spec(env_id);
  Dataset d;
  d.env_id = env_id;
  d.kind = DatasetKind::replay;
  d.obs_dim = spec.obs_dim;
  d.n_actions = spec.n_actions;
  d.meta.seed = seed;
  d.transitions.assign(log.begin(), log.begin() + static_cast<std::ptrdiff_t>(n));
  return d;
}

}  // namespace exid::data
