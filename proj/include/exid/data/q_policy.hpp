#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "exid/env/environment.hpp"
#include "exid/nn/mlp.hpp"

namespace exid::data {

/// Q-network acting greedily on scaled observations.
class QPolicy {
 public:
  QPolicy(std::string env_id, nn::MlpParams params);

  const std::string& env_id() const { return env_id_; }
  const nn::MlpParams& params() const { return params_; }
  const InputScaler& scaler() const { return scaler_; }

  nn::Vector q_values(std::span<const double> s) const;
  int act(std::span<const double> s) const;

 private:
  std::string env_id_;
  nn::MlpParams params_;
  InputScaler scaler_;
};

void save_q_policy(const std::filesystem::path& path, const QPolicy& policy);
/// Throws EnvMismatchError if the checkpoint belongs to another environment.
QPolicy load_q_policy(const std::filesystem::path& path, const std::string& expected_env = {});

}  // namespace exid::data
