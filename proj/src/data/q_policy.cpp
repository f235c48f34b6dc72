#include "exid/data/q_policy.hpp"

#include "exid/common/error.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/nn/functional.hpp"

namespace exid::data {

QPolicy::QPolicy(std::string env_id, nn::MlpParams params)
    : env_id_(std::move(env_id)), params_(std::move(params)), scaler_(env_spec(env_id_)) {
  const EnvSpec& spec = env_spec(env_id_);
  if (params_.input_dim() != spec.obs_dim || params_.output_dim() != spec.n_actions) {
    throw ShapeError("Q-network shape does not match " + env_id_);
  }
}

nn::Vector QPolicy::q_values(std::span<const double> s) const {
  return nn::predict(params_, scaled_vector(scaler_, s));
}

int QPolicy::act(std::span<const double> s) const {
  const nn::Vector q = q_values(s);
  return nn::argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

void save_q_policy(const std::filesystem::path& path, const QPolicy& policy) {
  nn::save_checkpoint(path, nn::Checkpoint{policy.params(), {{"env_id", policy.env_id()}, {"role", "q_policy"}}});
}

QPolicy load_q_policy(const std::filesystem::path& path, const std::string& expected_env) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  const auto it = ck.meta.find("env_id");
  if (it == ck.meta.end()) throw UsageError(path.string() + " has no env_id");
  if (!expected_env.empty() && it->second != expected_env) {
    throw EnvMismatchError("policy " + path.string() + " was trained on '" + it->second + "', not '" +
                           expected_env + "'");
  }
  return QPolicy(it->second, ck.params);
}

}  // namespace exid::data
