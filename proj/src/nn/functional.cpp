#include "exid/nn/functional.hpp"

#include <cmath>

#include "exid/common/error.hpp"

namespace exid::nn {

Vector logsumexp_rows(const Matrix& logits) {
  Vector out(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out(r) = m + std::log((logits.row(r).array() - m).exp().sum());
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  const Vector lse = logsumexp_rows(logits);
  out.colwise() -= lse;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw UsageError("argmax of an empty range");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) best = static_cast<int>(c);
  }
  return best;
}

LossAndGrad cross_entropy_labels(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) throw ShapeError("cross_entropy: label count mismatch");
  const Eigen::Index n = logits.rows();
  LossAndGrad out;
  out.grad = softmax_rows(logits);
  const Matrix logp = log_softmax_rows(logits);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int a = labels[static_cast<std::size_t>(r)];
    if (a < 0 || a >= logits.cols()) throw ShapeError("cross_entropy: label out of range");
    out.loss -= logp(r, a);
    out.grad(r, a) -= 1.0;
  }
  if (n > 0) {
    out.loss /= static_cast<double>(n);
    out.grad /= static_cast<double>(n);
  }
  return out;
}

LossAndGrad cross_entropy_soft(const Matrix& logits, const Matrix& targets) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols()) {
    throw ShapeError("cross_entropy_soft: target shape mismatch");
  }
  const Eigen::Index n = logits.rows();
  LossAndGrad out;
  const Matrix logp = log_softmax_rows(logits);
  out.loss = -(targets.array() * logp.array()).sum();
  // d/dz of -sum_a t_a log softmax(z)_a = softmax(z) * sum(t) - t
  out.grad = softmax_rows(logits);
  for (Eigen::Index r = 0; r < n; ++r) out.grad.row(r) *= targets.row(r).sum();
  out.grad -= targets;
  if (n > 0) {
    out.loss /= static_cast<double>(n);
    out.grad /= static_cast<double>(n);
  }
  return out;
}

LossAndGrad half_mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ShapeError("half_mse: shape mismatch");
  LossAndGrad out;
  const double count = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  out.loss = count > 0 ? 0.5 * diff.squaredNorm() / count : 0.0;
  out.grad = count > 0 ? Matrix(diff / count) : diff;
  return out;
}

}  // namespace exid::nn
