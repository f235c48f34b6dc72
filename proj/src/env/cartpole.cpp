#include <cmath>

#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/env/cartpole.hpp"

namespace exid::env {

const EnvSpec& CartPole::static_spec() {
  static const EnvSpec spec = [] {
    EnvSpec s;
    s.env_id = "cartpole";
    s.obs_dim = 4;
    s.n_actions = 2;
    // Velocities are unbounded natively; these are the clipped ranges used for synthetic sampling.
    s.obs_bounds = {{-2.0 * kXThreshold, 2.0 * kXThreshold},
                    {-3.0, 3.0},
                    {-2.0 * kThetaThreshold, 2.0 * kThetaThreshold},
                    {-3.5, 3.5}};
    s.max_steps = 500;
    s.action_names = {"left", "right"};
    s.feature_names = {{"x", 0}, {"x_dot", 1}, {"theta", 2}, {"theta_dot", 3}};
    return s;
  }();
  return spec;
}

Observation CartPole::reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "cartpole.reset"));
  for (auto& v : state_) v = uniform_real(rng, -0.05, 0.05);
  steps_ = 0;
  ready_ = true;
  done_ = false;
  return {state_.begin(), state_.end()};
}

void CartPole::set_state(const std::array<double, 4>& state) {
  state_ = state;
  steps_ = 0;
  ready_ = true;
  done_ = false;
}

StepResult CartPole::step(int action) {
  if (!ready_) throw UsageError("CartPole: step before reset");
  if (done_) throw UsageError("CartPole: step on a finished episode");
  if (action < 0 || action >= 2) throw UsageError("CartPole: action out of range");

  auto [x, x_dot, theta, theta_dot] = state_;
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) / (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;
  state_ = {x, x_dot, theta, theta_dot};
  ++steps_;

  const bool terminated = x < -kXThreshold || x > kXThreshold || theta < -kThetaThreshold || theta > kThetaThreshold;
  const bool truncated = !terminated && steps_ >= spec().max_steps;
  done_ = terminated || truncated;
  return {{state_.begin(), state_.end()}, 1.0, done_, truncated};
}

}  // namespace exid::env
