#include "exid/data/dqn.hpp"

#include <algorithm>
#include <cmath>

#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/adam.hpp"
#include "exid/nn/functional.hpp"

namespace exid::data {

DqnConfig DqnConfig::defaults_for(const std::string& env_id) {
  DqnConfig c;
  c.hidden = {64, 64};
  if (env_id == "mountaincar") {
    c.total_steps = 200000;
    c.lr = 4e-3;
    c.batch_size = 128;
    c.buffer_capacity = 10000;
    c.learning_starts = 1000;
    c.gamma = 0.98;
    c.target_update_interval = 600;
    c.train_freq = 16;
    c.gradient_steps = 8;
    c.exploration_fraction = 0.2;
    c.exploration_final_eps = 0.07;
    c.eval_interval = 5000;
    c.eval_episodes = 20;
  } else if (env_id == "cartpole") {
    c.total_steps = 100000;
    c.lr = 2.3e-3;
    c.batch_size = 64;
    c.buffer_capacity = 100000;
    c.learning_starts = 1000;
    c.gamma = 0.99;
    c.target_update_interval = 10;
    c.train_freq = 256;
    c.gradient_steps = 128;
    c.exploration_fraction = 0.16;
    c.exploration_final_eps = 0.04;
    c.eval_interval = 2560;
  } else if (env_id == "minigrid-dynobs-6x6") {
    c.total_steps = 100000;
    c.lr = 1e-3;
    c.batch_size = 64;
    c.buffer_capacity = 100000;
    c.learning_starts = 1000;
    c.gamma = 0.95;
    c.target_update_interval = 500;
    c.train_freq = 4;
    c.gradient_steps = 1;
    c.exploration_fraction = 0.5;
    c.exploration_final_eps = 0.05;
    c.eval_interval = 5000;
  } else if (env_id == "minigrid-lavagap-7x7") {
    c.total_steps = 60000;
    c.lr = 5e-4;
    c.batch_size = 64;
    c.buffer_capacity = 60000;
    c.learning_starts = 1000;
    c.gamma = 0.99;
    c.target_update_interval = 1000;
    c.train_freq = 4;
    c.gradient_steps = 1;
    c.exploration_fraction = 0.3;
    c.exploration_final_eps = 0.05;
    c.eval_interval = 5000;
  } else {
    env_spec(env_id);  // throws LookupError
  }
  return c;
}

void DqnConfig::validate() const {
  if (total_steps <= 0) throw UsageError("dqn total_steps must be positive");
  if (batch_size <= 0 || buffer_capacity <= 0 || train_freq <= 0 || gradient_steps < 0) {
    throw UsageError("dqn batch, buffer and training frequency must be positive");
  }
  if (!(lr > 0.0) || gamma < 0.0 || gamma > 1.0) throw UsageError("dqn lr must be positive and gamma in [0, 1]");
  if (target_update_interval <= 0) throw UsageError("dqn target_update_interval must be positive");
  if (exploration_fraction < 0.0 || exploration_final_eps < 0.0 || exploration_final_eps > 1.0) {
    throw UsageError("dqn exploration schedule is invalid");
  }
}

double greedy_return(const QPolicy& policy, int episodes, std::uint64_t seed) {
  auto env = make_environment(policy.env_id());
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Observation obs = env->reset(derive_seed(seed, static_cast<std::uint64_t>(e)));
    for (;;) {
      const StepResult st = env->step(policy.act(obs));
      total += st.reward;
      if (st.done || st.truncated) break;
      obs = st.observation;
    }
  }
  return total / std::max(1, episodes);
}

namespace {

double huber_grad(double diff) { return std::clamp(diff, -1.0, 1.0); }

void train_batch(nn::MlpParams& q, const nn::MlpParams& target, nn::AdamState& adam, const DqnConfig& c,
                 const InputScaler& scaler, const std::vector<const Transition*>& batch) {
  std::vector<Observation> s, s2;
  s.reserve(batch.size());
  s2.reserve(batch.size());
  for (const auto* t : batch) {
    s.push_back(t->s);
    s2.push_back(t->s_next);
  }
  const nn::Matrix next_q = nn::predict(target, scaled_matrix(scaler, s2));
  auto fwd = nn::forward(q, scaled_matrix(scaler, s));
  nn::Matrix grad = nn::Matrix::Zero(fwd.output.rows(), fwd.output.cols());
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Transition& t = *batch[i];
    const double y = t.r + (t.done ? 0.0 : c.gamma * next_q.row(row).maxCoeff());
    grad(row, t.a) = huber_grad(fwd.output(row, t.a) - y) / n;
  }
  nn::Gradients g = nn::backward(q, fwd.cache, grad);
  nn::clip_global_norm(g, c.max_grad_norm);
  nn::adam_step(q, g, adam, c.lr);
}

}  // namespace

DqnResult train_online_dqn(const std::string& env_id, const DqnConfig& config, std::uint64_t seed) {
  config.validate();
  const EnvSpec& spec = env_spec(env_id);
  auto env = make_environment(env_id);
  const InputScaler scaler(spec);

  Rng init_rng = make_rng(seed, "dqn.init");
  Rng explore_rng = make_rng(seed, "dqn.explore");
  Rng batch_rng = make_rng(seed, "dqn.batch");
  const std::uint64_t env_seed = derive_seed(seed, "dqn.env");
  const std::uint64_t eval_seed = derive_seed(seed, "dqn.eval");

  std::vector<int> sizes{spec.obs_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(spec.n_actions);
  nn::MlpParams q = nn::MlpParams::lecun_normal(sizes, 0.0, init_rng);
  nn::MlpParams target = q;
  nn::AdamState adam = nn::AdamState::for_params(q);

  DqnResult result{QPolicy(env_id, q), {}, {}, {}};
  result.log.reserve(static_cast<std::size_t>(config.total_steps));
  std::optional<double> best_eval;

  std::vector<std::size_t> replay;  // indices into result.log; ring buffer
  std::size_t replay_head = 0;
  const auto capacity = static_cast<std::size_t>(config.buffer_capacity);

  std::uint64_t episode = 0;
  Observation obs = env->reset(derive_seed(env_seed, episode));
  double episode_return = 0.0;
  const double explore_steps = config.exploration_fraction * static_cast<double>(config.total_steps);
  std::vector<const Transition*> batch(static_cast<std::size_t>(config.batch_size));

  for (long step = 1; step <= config.total_steps; ++step) {
    const double progress = explore_steps > 0.0 ? std::min(1.0, static_cast<double>(step - 1) / explore_steps) : 1.0;
    const double eps = config.exploration_initial_eps +
                       progress * (config.exploration_final_eps - config.exploration_initial_eps);
    int action;
    if (bernoulli(explore_rng, eps)) {
      action = uniform_int(explore_rng, spec.n_actions);
    } else {
      const nn::Vector qv = nn::predict(q, scaled_vector(scaler, obs));
      action = nn::argmax(std::span<const double>(qv.data(), static_cast<std::size_t>(qv.size())));
    }
    StepResult st = env->step(action);
    episode_return += st.reward;
    result.log.push_back(Transition{obs, action, st.reward, st.observation, st.done && !st.truncated});
    if (replay.size() < capacity) {
      replay.push_back(result.log.size() - 1);
    } else {
      replay[replay_head] = result.log.size() - 1;
      replay_head = (replay_head + 1) % capacity;
    }
    if (st.done || st.truncated) {
      result.episode_returns.push_back(episode_return);
      episode_return = 0.0;
      obs = env->reset(derive_seed(env_seed, ++episode));
    } else {
      obs = std::move(st.observation);
    }

    if (step > config.learning_starts && step % config.train_freq == 0) {
      for (int g = 0; g < config.gradient_steps; ++g) {
        for (auto& b : batch) b = &result.log[replay[static_cast<std::size_t>(uniform_int(batch_rng, static_cast<int>(replay.size())))]];
        train_batch(q, target, adam, config, scaler, batch);
      }
    }
    if (step % config.target_update_interval == 0) target = q;

    const bool eval_now = config.eval_interval > 0 && step > config.learning_starts &&
                          (step % config.eval_interval == 0 || step == config.total_steps);
    if (eval_now) {
      QPolicy candidate(env_id, q);
      const double score = greedy_return(candidate, config.eval_episodes, eval_seed);
      result.evaluations.emplace_back(step, score);
      if (!best_eval || score >= *best_eval) {
        best_eval = score;
        result.policy = std::move(candidate);
      }
    }
  }
  if (!best_eval) result.policy = QPolicy(env_id, q);
  return result;
}

}  // namespace exid::data
