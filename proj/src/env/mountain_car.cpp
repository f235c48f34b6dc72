#include <algorithm>
#include <cmath>

#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/env/mountain_car.hpp"

namespace exid::env {

const EnvSpec& MountainCar::static_spec() {
  static const EnvSpec spec = [] {
    EnvSpec s;
    s.env_id = "mountaincar";
    s.obs_dim = 2;
    s.n_actions = 3;
    s.obs_bounds = {{kMinPosition, kMaxPosition}, {-kMaxSpeed, kMaxSpeed}};
    s.max_steps = 200;
    s.action_names = {"left", "noop", "right"};
    s.feature_names = {{"pos", 0}, {"vel", 1}};
    return s;
  }();
  return spec;
}

Observation MountainCar::reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "mountaincar.reset"));
  position_ = uniform_real(rng, -0.6, -0.4);
  velocity_ = 0.0;
  steps_ = 0;
  ready_ = true;
  done_ = false;
  return {position_, velocity_};
}

void MountainCar::set_state(double position, double velocity) {
  position_ = position;
  velocity_ = velocity;
  steps_ = 0;
  ready_ = true;
  done_ = false;
}

StepResult MountainCar::step(int action) {
  if (!ready_) throw UsageError("MountainCar: step before reset");
  if (done_) throw UsageError("MountainCar: step on a finished episode");
  if (action < 0 || action >= 3) throw UsageError("MountainCar: action out of range");

  velocity_ += (action - 1) * kForce + std::cos(3.0 * position_) * (-kGravity);
  velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
  position_ += velocity_;
  position_ = std::clamp(position_, kMinPosition, kMaxPosition);
  if (position_ == kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
  ++steps_;

  const bool terminated = position_ >= kGoalPosition && velocity_ >= 0.0;
  const bool truncated = !terminated && steps_ >= spec().max_steps;
  done_ = terminated || truncated;
  return {{position_, velocity_}, -1.0, done_, truncated};
}

}  // namespace exid::env
