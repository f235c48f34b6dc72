#include "exid/train/critic.hpp"

#include "exid/common/error.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/nn/functional.hpp"

namespace exid::train {

Critic Critic::create(const std::string& env_id, const TrainConfig& config, std::uint64_t seed) {
  const EnvSpec& spec = env_spec(env_id);
  std::vector<int> sizes{spec.obs_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(spec.n_actions);
  Rng rng = make_rng(seed, "init");
  Critic c{env_id, nn::MlpParams::lecun_normal(sizes, config.dropout, rng), {}, {}, InputScaler(spec)};
  c.target_params = c.params;
  c.adam = nn::AdamState::for_params(c.params);
  return c;
}

nn::Vector Critic::q_values(std::span<const double> s) const {
  return nn::predict(params, data::scaled_vector(scaler, s));
}

int Critic::greedy_action(std::span<const double> s) const {
  const nn::Vector q = q_values(s);
  return nn::argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

nn::Matrix Critic::q_batch(const std::vector<Observation>& states) const {
  return nn::predict(params, data::scaled_matrix(scaler, states));
}

void save_critic(const std::filesystem::path& path, const Critic& critic) {
  nn::save_checkpoint(path, nn::Checkpoint{critic.params, {{"env_id", critic.env_id}, {"role", "critic"}}});
}

Critic load_critic(const std::filesystem::path& path, const std::string& expected_env) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  const auto it = ck.meta.find("env_id");
  if (it == ck.meta.end()) throw UsageError(path.string() + " has no env_id");
  if (!expected_env.empty() && it->second != expected_env) {
    throw EnvMismatchError("critic " + path.string() + " belongs to '" + it->second + "', not '" + expected_env + "'");
  }
  const EnvSpec& spec = env_spec(it->second);
  if (ck.params.input_dim() != spec.obs_dim || ck.params.output_dim() != spec.n_actions) {
    throw ShapeError("critic network shape does not match " + it->second);
  }
  Critic c{it->second, ck.params, ck.params, nn::AdamState::for_params(ck.params), InputScaler(spec)};
  return c;
}

Batch make_batch(const InputScaler& scaler, const std::vector<const data::Transition*>& transitions) {
  if (transitions.empty()) throw UsageError("batch must not be empty");
  Batch b;
  std::vector<Observation> next;
  const auto n = static_cast<Eigen::Index>(transitions.size());
  b.rewards.resize(n);
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const data::Transition& t = *transitions[i];
    b.states.push_back(t.s);
    next.push_back(t.s_next);
    b.actions.push_back(t.a);
    b.rewards(static_cast<Eigen::Index>(i)) = t.r;
    b.done.push_back(t.done);
  }
  b.x = data::scaled_matrix(scaler, b.states);
  b.x_next = data::scaled_matrix(scaler, next);
  return b;
}

Batch make_batch(const InputScaler& scaler, const std::vector<data::Transition>& transitions) {
  std::vector<const data::Transition*> ptrs;
  for (const auto& t : transitions) ptrs.push_back(&t);
  return make_batch(scaler, ptrs);
}

Batch sample_batch(const data::Dataset& dataset, int size, const InputScaler& scaler, Rng& rng) {
  if (dataset.empty()) throw EmptyDatasetError("cannot sample from an empty dataset");
  std::vector<const data::Transition*> picks(static_cast<std::size_t>(size));
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  for (auto& p : picks) p = &dataset.transitions[pick(rng)];
  return make_batch(scaler, picks);
}

}  // namespace exid::train
