#pragma once

#include <array>

#include "exid/env/environment.hpp"

namespace exid::env {

/// CartPole-v1 dynamics (explicit Euler, tau = 0.02), 500-step limit, reward +1 per step.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kXThreshold = 2.4;

  static const EnvSpec& static_spec();
  const EnvSpec& spec() const override { return static_spec(); }
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int elapsed_steps() const override { return steps_; }

  void set_state(const std::array<double, 4>& state);

 private:
  std::array<double, 4> state_{};
  int steps_ = 0;
  bool ready_ = false;
  bool done_ = false;
};

}  // namespace exid::env
