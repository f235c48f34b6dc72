#include "exid/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "exid/common/error.hpp"

namespace exid::nn {

double selu(double z) {
  return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z);
}

double selu_derivative(double z) {
  return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z);
}

MlpParams MlpParams::zeros(std::vector<int> layer_sizes, double dropout_rate) {
  if (layer_sizes.size() < 2) throw UsageError("an MLP needs at least an input and an output size");
  MlpParams params;
  params.layer_sizes = std::move(layer_sizes);
  params.dropout_rate = dropout_rate;
  for (std::size_t i = 0; i + 1 < params.layer_sizes.size(); ++i) {
    const int in = params.layer_sizes[i];
    const int out = params.layer_sizes[i + 1];
    if (in <= 0 || out <= 0) throw UsageError("layer sizes must be positive");
    params.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
  }
  params.validate();
  return params;
}

MlpParams MlpParams::lecun_normal(std::vector<int> layer_sizes, double dropout_rate, Rng& rng) {
  MlpParams params = zeros(std::move(layer_sizes), dropout_rate);
  for (auto& layer : params.layers) {
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(layer.weight.cols())));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
  return params;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
  if (layers.size() + 1 != layer_sizes.size()) throw ShapeError("layer count does not match layer sizes");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.weight.rows() != layer_sizes[i + 1] || layer.weight.cols() != layer_sizes[i] ||
        layer.bias.size() != layer_sizes[i + 1]) {
      throw ShapeError("layer " + std::to_string(i) + " has shape inconsistent with layer sizes");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw UsageError("layer " + std::to_string(i) + " holds non-finite parameters");
    }
  }
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layer_sizes != other.layer_sizes || dropout_rate != other.dropout_rate) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight != other.layers[i].weight || layers[i].bias != other.layers[i].bias) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
  }
  return g;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& layer : layers) s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return s;
}

bool Gradients::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void Gradients::scale(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

void Gradients::add_scaled(const Gradients& other, double factor) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += factor * other.layers[i].weight;
    layers[i].bias += factor * other.layers[i].bias;
  }
}

ForwardResult forward(const MlpParams& params, const Matrix& batch, ForwardMode mode, Rng* rng) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(batch.cols()) + " features, network expects " +
                     std::to_string(params.input_dim()));
  }
  const bool stochastic = mode == ForwardMode::mc_dropout && params.dropout_rate > 0.0;
  if (stochastic && rng == nullptr) throw UsageError("forward: mc_dropout mode needs a random source");

  ForwardResult result;
  auto& cache = result.cache;
  const std::size_t n_layers = params.layers.size();
  cache.inputs.reserve(n_layers);
  cache.pre_activations.reserve(n_layers);

  Matrix current = batch;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& layer = params.layers[i];
    Matrix z = current * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    cache.inputs.push_back(std::move(current));
    if (i + 1 == n_layers) {
      result.output = z;
      cache.pre_activations.push_back(std::move(z));
      break;
    }
    Matrix a = z.unaryExpr([](double v) { return selu(v); });
    Matrix mask = Matrix::Ones(a.rows(), a.cols());
    if (stochastic) {
      const double keep = 1.0 - params.dropout_rate;
      const double scale = 1.0 / keep;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = u(*rng) < keep ? scale : 0.0;
      }
      a.array() *= mask.array();
    }
    cache.pre_activations.push_back(std::move(z));
    cache.masks.push_back(std::move(mask));
    current = std::move(a);
  }
  return result;
}

Matrix predict(const MlpParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("predict: input has " + std::to_string(batch.cols()) + " features, network expects " +
                     std::to_string(params.input_dim()));
  }
  Matrix current = batch;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    Matrix z = current * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (i + 1 < params.layers.size()) z = z.unaryExpr([](double v) { return selu(v); });
    current = std::move(z);
  }
  return current;
}

Vector predict(const MlpParams& params, const Vector& input) {
  Matrix row = input.transpose();
  return predict(params, row).row(0).transpose();
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad) {
  const std::size_t n_layers = params.layers.size();
  if (cache.empty() || cache.inputs.size() != n_layers || cache.pre_activations.size() != n_layers ||
      cache.masks.size() + 1 != n_layers) {
    throw UsageError("backward: cache does not come from a forward pass of this network");
  }
  if (output_grad.rows() != cache.inputs.front().rows() || output_grad.cols() != params.output_dim()) {
    throw ShapeError("backward: output gradient shape does not match the forward output");
  }

  Gradients grads = Gradients::zeros_like(params);
  Matrix delta = output_grad;  // dLoss / dZ for the current layer
  for (std::size_t k = n_layers; k-- > 0;) {
    grads.layers[k].weight.noalias() = delta.transpose() * cache.inputs[k];
    grads.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    Matrix upstream = delta * params.layers[k].weight;
    const Matrix& z = cache.pre_activations[k - 1];
    delta = upstream.array() * cache.masks[k - 1].array() * z.unaryExpr([](double v) { return selu_derivative(v); }).array();
  }
  return grads;
}

McStats mc_stats(const MlpParams& params, const Matrix& batch, int passes, Rng& rng) {
  if (passes <= 0) throw UsageError("mc_stats: the number of passes must be positive");
  McStats stats;
  if (params.dropout_rate == 0.0) {
    // Every pass is the same deterministic forward.
    stats.mean = forward(params, batch, ForwardMode::deterministic, nullptr).output;
    stats.variance = Matrix::Zero(batch.rows(), params.output_dim());
    return stats;
  }
  stats.mean = Matrix::Zero(batch.rows(), params.output_dim());
  Matrix sum_sq = Matrix::Zero(batch.rows(), params.output_dim());
  std::vector<Matrix> outputs;
  outputs.reserve(static_cast<std::size_t>(passes));
  for (int t = 0; t < passes; ++t) {
    outputs.push_back(forward(params, batch, ForwardMode::mc_dropout, &rng).output);
    stats.mean += outputs.back();
  }
  stats.mean /= static_cast<double>(passes);
  for (const auto& out : outputs) sum_sq.array() += (out - stats.mean).array().square();
  stats.variance = sum_sq / static_cast<double>(passes);
  return stats;
}

}  // namespace exid::nn
