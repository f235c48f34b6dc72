#include "exid/nn/adam.hpp"

#include <cmath>
#include <string>

#include "exid/common/error.hpp"

namespace exid::nn {

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState state;
  state.first_moment = Gradients::zeros_like(params);
  state.second_moment = Gradients::zeros_like(params);
  return state;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size()) {
    throw ShapeError("adam_step: gradient/state layer count does not match parameters");
  }
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    if (grads.layers[i].weight.rows() != params.layers[i].weight.rows() ||
        grads.layers[i].weight.cols() != params.layers[i].weight.cols() ||
        grads.layers[i].bias.size() != params.layers[i].bias.size()) {
      throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(i));
    }
  }
  if (!grads.all_finite()) {
    throw TrainingError("adam_step: non-finite gradient at optimizer step " + std::to_string(state.step + 1));
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double eps = state.epsilon;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace exid::nn
