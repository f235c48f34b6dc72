#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/env/environment.hpp"
#include "exid/nn/mlp.hpp"
#include "exid/train/config.hpp"

namespace exid::train {

struct BcPolicy {
  std::string env_id;
  nn::MlpParams params;  // action logits
  InputScaler scaler;

  int act(std::span<const double> s) const;
};

struct BcResult {
  BcPolicy policy;
  std::vector<double> epoch_loss;  // full-dataset cross-entropy after each accepted epoch
  std::vector<double> step_loss;   // minibatch loss at every optimizer step
};

/// Minibatch cross-entropy fit of dataset actions; uses config.hidden, lr, batch_size and total_steps.
/// Epochs that would raise the full-dataset loss are rolled back with a halved step size.
BcResult train_bc(const data::Dataset& dataset, const TrainConfig& config, std::uint64_t seed);

void save_bc(const std::filesystem::path& path, const BcPolicy& policy);
BcPolicy load_bc(const std::filesystem::path& path, const std::string& expected_env = {});

}  // namespace exid::train
