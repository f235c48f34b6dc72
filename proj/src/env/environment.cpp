#include "exid/env/environment.hpp"

#include <algorithm>

#include "env_impl.hpp"
#include "exid/common/error.hpp"

namespace exid {

bool EnvSpec::in_bounds(std::span<const double> obs) const {
  if (static_cast<int>(obs.size()) != obs_dim) return false;
  for (int i = 0; i < obs_dim; ++i) {
    if (!obs_bounds[static_cast<std::size_t>(i)].contains(obs[static_cast<std::size_t>(i)])) return false;
  }
  return true;
}

const std::vector<std::string>& supported_env_ids() {
  static const std::vector<std::string> ids = {"mountaincar", "cartpole", "minigrid-dynobs-6x6",
                                               "minigrid-lavagap-7x7"};
  return ids;
}

bool is_supported_env(std::string_view env_id) {
  const auto& ids = supported_env_ids();
  return std::find(ids.begin(), ids.end(), env_id) != ids.end();
}

namespace {

[[noreturn]] void unknown_env(std::string_view env_id) {
  std::string msg = "unknown environment '" + std::string(env_id) + "'; supported:";
  for (const auto& id : supported_env_ids()) msg += " " + id;
  throw LookupError(msg);
}

}  // namespace

std::unique_ptr<Environment> make_environment(std::string_view env_id) {
  if (env_id == "mountaincar") return std::make_unique<env::MountainCar>();
  if (env_id == "cartpole") return std::make_unique<env::CartPole>();
  if (env_id == "minigrid-dynobs-6x6") return std::make_unique<env::DynamicObstacles>();
  if (env_id == "minigrid-lavagap-7x7") return std::make_unique<env::LavaGap>();
  unknown_env(env_id);
}

const EnvSpec& env_spec(std::string_view env_id) {
  if (env_id == "mountaincar") return env::MountainCar::static_spec();
  if (env_id == "cartpole") return env::CartPole::static_spec();
  if (env_id == "minigrid-dynobs-6x6") return env::DynamicObstacles::static_spec();
  if (env_id == "minigrid-lavagap-7x7") return env::LavaGap::static_spec();
  unknown_env(env_id);
}

InputScaler::InputScaler(const EnvSpec& spec) {
  for (const auto& b : spec.obs_bounds) {
    center_.push_back(b.mid());
    inv_half_width_.push_back(2.0 / b.width());
  }
}

void InputScaler::apply(std::span<const double> obs, std::span<double> out) const {
  if (obs.size() != center_.size() || out.size() != center_.size()) {
    throw ShapeError("InputScaler: observation has wrong dimension");
  }
  for (std::size_t i = 0; i < obs.size(); ++i) out[i] = (obs[i] - center_[i]) * inv_half_width_[i];
}

Observation InputScaler::apply(std::span<const double> obs) const {
  Observation out(obs.size());
  apply(obs, out);
  return out;
}

}  // namespace exid
