#pragma once

#include <cstdint>

#include "exid/nn/mlp.hpp"

namespace exid::nn {

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam update. Throws TrainingError on non-finite gradients.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

/// Rescales `grads` in place so its global L2 norm is at most `max_norm`; returns the original norm.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace exid::nn
