#pragma once

#include <span>

#include "exid/nn/mlp.hpp"

namespace exid::nn {

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
Matrix log_softmax_rows(const Matrix& logits);
Vector logsumexp_rows(const Matrix& logits);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> values);
int argmax_row(const Matrix& m, Eigen::Index row);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // dLoss / dInput, same shape as the input
};

/// Mean over rows of -log softmax(logits)[label].
LossAndGrad cross_entropy_labels(const Matrix& logits, std::span<const int> labels);

/// Mean over rows of -sum_a target(a) log softmax(logits)(a); each target row is a distribution.
LossAndGrad cross_entropy_soft(const Matrix& logits, const Matrix& targets);

/// 0.5 * mean over entries of (pred - target)^2.
LossAndGrad half_mse(const Matrix& pred, const Matrix& target);

}  // namespace exid::nn
