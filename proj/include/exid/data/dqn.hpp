#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/data/q_policy.hpp"

namespace exid::data {

struct DqnConfig {
  long total_steps = 100000;
  std::vector<int> hidden{64, 64};
  double lr = 1e-3;
  int batch_size = 64;
  long buffer_capacity = 100000;
  long learning_starts = 1000;
  int train_freq = 4;
  int gradient_steps = 1;
  double gamma = 0.99;
  long target_update_interval = 1000;
  double exploration_fraction = 0.1;
  double exploration_initial_eps = 1.0;
  double exploration_final_eps = 0.05;
  double max_grad_norm = 10.0;
  /// Greedy evaluation every eval_interval steps; the best evaluated network is returned. 0 disables.
  long eval_interval = 0;
  int eval_episodes = 5;

  static DqnConfig defaults_for(const std::string& env_id);
  void validate() const;
};

struct DqnResult {
  QPolicy policy;
  std::vector<Transition> log;  // every environment transition in order
  std::vector<double> episode_returns;
  std::vector<std::pair<long, double>> evaluations;  // (step, mean greedy return)
};

/// Online DQN with experience replay, a hard-updated target network, epsilon-greedy
/// exploration with a linear schedule and the Huber TD loss.
DqnResult train_online_dqn(const std::string& env_id, const DqnConfig& config, std::uint64_t seed);

/// Mean undiscounted return of `policy` over `episodes` episodes with reset seeds derived from `seed`.
double greedy_return(const QPolicy& policy, int episodes, std::uint64_t seed);

}  // namespace exid::data
