#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "exid/common/rng.hpp"

namespace exid::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;

double selu(double z);
double selu_derivative(double z);

struct Layer {
  Matrix weight;  // (out, in)
  Vector bias;    // (out)
};

/// Feed-forward network: SELU on every hidden layer, linear output layer,
/// inverted dropout after each hidden activation.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Layer> layers;
  double dropout_rate = 0.0;

  static MlpParams zeros(std::vector<int> layer_sizes, double dropout_rate = 0.0);
  /// LeCun-normal weights (std = 1/sqrt(fan_in)), zero biases.
  static MlpParams lecun_normal(std::vector<int> layer_sizes, double dropout_rate, Rng& rng);

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  /// Throws ShapeError / UsageError when shapes, values or dropout rate are invalid.
  void validate() const;

  bool operator==(const MlpParams& other) const;
};

/// Same shapes as MlpParams::layers; used for gradients and optimizer moments.
struct Gradients {
  std::vector<Layer> layers;

  static Gradients zeros_like(const MlpParams& params);
  double squared_norm() const;
  bool all_finite() const;
  void scale(double factor);
  void add_scaled(const Gradients& other, double factor);
};

enum class ForwardMode { deterministic, mc_dropout };

struct ForwardCache {
  std::vector<Matrix> inputs;           // input to each layer (after dropout), rows = samples
  std::vector<Matrix> pre_activations;  // per layer, rows = samples
  std::vector<Matrix> masks;            // per hidden layer; all-ones in deterministic mode

  bool empty() const { return inputs.empty(); }
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

/// Batched forward pass; each row of `batch` is one input.
/// `rng` is only consulted in mc_dropout mode and must then be non-null.
ForwardResult forward(const MlpParams& params, const Matrix& batch, ForwardMode mode = ForwardMode::deterministic,
                      Rng* rng = nullptr);

/// Deterministic forward without keeping a cache.
Matrix predict(const MlpParams& params, const Matrix& batch);
Vector predict(const MlpParams& params, const Vector& input);

/// Gradients of the loss with respect to every parameter, given dLoss/dOutput
/// (same shape as the forward output). Replays the cached dropout masks.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad);

struct McStats {
  Matrix mean;      // rows = samples, cols = outputs
  Matrix variance;  // population variance over the passes
};

/// Mean and population variance of the outputs over `passes` stochastic forwards.
McStats mc_stats(const MlpParams& params, const Matrix& batch, int passes, Rng& rng);

/// Packs a list of equally sized observations into a row-major batch matrix.
template <typename Range>
Matrix to_batch(const Range& rows, int dim) {
  Matrix out(static_cast<Eigen::Index>(std::size(rows)), dim);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (int c = 0; c < dim; ++c) out(r, c) = row[c];
    ++r;
  }
  return out;
}

}  // namespace exid::nn
