#pragma once

#include "exid/env/environment.hpp"

namespace exid::env {

/// Classic MountainCar: state (position, velocity), actions {push left, no push, push right},
/// reward -1 per step, success at position >= 0.5, 200-step limit.
class MountainCar final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  static const EnvSpec& static_spec();
  const EnvSpec& spec() const override { return static_spec(); }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int elapsed_steps() const override { return steps_; }

  /// Places the car at an arbitrary state (used to probe the dynamics).
  void set_state(double position, double velocity);

 private:
  double position_ = 0.0;
  double velocity_ = 0.0;
  int steps_ = 0;
  bool ready_ = false;
  bool done_ = false;
};

}  // namespace exid::env
