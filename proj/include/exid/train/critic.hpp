#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/env/environment.hpp"
#include "exid/nn/adam.hpp"
#include "exid/nn/mlp.hpp"
#include "exid/train/config.hpp"

namespace exid::train {

/// Q-network with MC dropout, its soft-updated target copy and optimizer state.
struct Critic {
  std::string env_id;
  nn::MlpParams params;
  nn::MlpParams target_params;
  nn::AdamState adam;
  InputScaler scaler;

  /// LeCun-normal initialisation from the "init" stream of `seed`; the target starts as a copy.
  static Critic create(const std::string& env_id, const TrainConfig& config, std::uint64_t seed);

  nn::Vector q_values(std::span<const double> s) const;
  int greedy_action(std::span<const double> s) const;
  /// Deterministic Q-values for raw observations, one row per state.
  nn::Matrix q_batch(const std::vector<Observation>& states) const;
};

/// Saves the online network; load restores it as both online and target.
void save_critic(const std::filesystem::path& path, const Critic& critic);
Critic load_critic(const std::filesystem::path& path, const std::string& expected_env = {});

/// Training minibatch with observations already scaled for the network.
struct Batch {
  std::vector<Observation> states;  // raw, for rule evaluation
  nn::Matrix x;
  nn::Matrix x_next;
  std::vector<int> actions;
  nn::Vector rewards;
  std::vector<bool> done;

  std::size_t size() const { return actions.size(); }
};

Batch make_batch(const InputScaler& scaler, const std::vector<const data::Transition*>& transitions);
Batch make_batch(const InputScaler& scaler, const std::vector<data::Transition>& transitions);
/// Uniform sampling with replacement.
Batch sample_batch(const data::Dataset& dataset, int size, const InputScaler& scaler, Rng& rng);

}  // namespace exid::train
