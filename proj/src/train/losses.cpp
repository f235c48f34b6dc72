#include "exid/train/losses.hpp"

#include <cmath>

#include "exid/common/error.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/functional.hpp"

namespace exid::train {

nn::Vector bellman_targets(const nn::MlpParams& target, const Batch& batch, double gamma) {
  const nn::Matrix next_q = nn::predict(target, batch.x_next);
  nn::Vector y = batch.rewards;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!batch.done[static_cast<std::size_t>(i)]) y(i) += gamma * next_q.row(i).maxCoeff();
  }
  return y;
}

OutputLoss cql_output_loss(const nn::Matrix& q, const nn::Vector& targets, std::span<const int> actions, double alpha,
                           double* conservative, double* bellman) {
  const Eigen::Index n = q.rows();
  if (n == 0) throw UsageError("CQL loss needs a non-empty batch");
  if (targets.size() != n || static_cast<Eigen::Index>(actions.size()) != n) throw ShapeError("CQL batch sizes differ");
  const nn::Vector lse = nn::logsumexp_rows(q);
  const nn::Matrix soft = nn::softmax_rows(q);
  const double inv_n = 1.0 / static_cast<double>(n);
  double cons = 0.0;
  double bell = 0.0;
  nn::Matrix grad = alpha * inv_n * soft;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.cols()) throw ShapeError("action index out of range");
    const double qa = q(i, a);
    cons += lse(i) - qa;
    const double diff = qa - targets(i);
    bell += diff * diff;
    grad(i, a) += -alpha * inv_n + diff * inv_n;
  }
  cons *= alpha * inv_n;
  bell *= 0.5 * inv_n;
  if (conservative) *conservative = cons;
  if (bellman) *bellman = bell;
  return {cons + bell, std::move(grad)};
}

CqlLoss cql_loss(const Critic& critic, const Batch& batch, double alpha, double gamma) {
  const nn::Vector y = bellman_targets(critic.target_params, batch, gamma);
  auto fwd = nn::forward(critic.params, batch.x);
  CqlLoss out;
  const OutputLoss ol = cql_output_loss(fwd.output, y, batch.actions, alpha, &out.conservative, &out.bellman);
  if (!std::isfinite(ol.loss)) throw TrainingError("CQL loss is not finite");
  out.loss = ol.loss;
  out.grads = nn::backward(critic.params, fwd.cache, ol.grad);
  return out;
}

Matching collect_matching(const Batch& batch, const nn::Matrix& q, const knowledge::DecisionTree& tree,
                          const teacher::TeacherPolicy& teacher) {
  Matching m;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (tree.satisfies(batch.states[i])) candidates.push_back(i);
  }
  if (candidates.empty()) return m;
  nn::Matrix x(static_cast<Eigen::Index>(candidates.size()), batch.x.cols());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = batch.x.row(static_cast<Eigen::Index>(candidates[k]));
  }
  const std::vector<int> teacher_a = teacher::teacher_actions(teacher, x);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::size_t row = candidates[k];
    const int critic_a = nn::argmax_row(q, static_cast<Eigen::Index>(row));
    if (critic_a == teacher_a[k]) continue;
    m.rows.push_back(row);
    m.states.push_back(batch.states[row]);
    m.a_s.push_back(critic_a);
    m.a_t.push_back(teacher_a[k]);
  }
  return m;
}

Matching collect_matching(const Batch& batch, const knowledge::DecisionTree& tree, const Critic& critic,
                          const teacher::TeacherPolicy& teacher) {
  return collect_matching(batch, nn::predict(critic.params, batch.x), tree, teacher);
}

OutputLoss reg_output_loss(const nn::Matrix& q, std::span<const std::size_t> rows, std::span<const int> a_s,
                           std::span<const int> a_t) {
  if (rows.size() != a_s.size() || rows.size() != a_t.size()) throw ShapeError("regularizer lists differ in length");
  OutputLoss out{0.0, nn::Matrix::Zero(q.rows(), q.cols())};
  if (rows.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    const double diff = q(r, a_s[k]) - q(r, a_t[k]);
    out.loss += diff * diff;
    // Accumulate so that a_s == a_t cancels to zero.
    out.grad(r, a_s[k]) += 2.0 * diff * inv_n;
    out.grad(r, a_t[k]) -= 2.0 * diff * inv_n;
  }
  out.loss *= inv_n;
  return out;
}

LossResult reg_loss(const Critic& critic, const std::vector<Observation>& s_r, std::span<const int> a_s,
                    std::span<const int> a_t) {
  if (s_r.size() != a_s.size() || s_r.size() != a_t.size()) throw ShapeError("regularizer lists differ in length");
  if (s_r.empty()) return {0.0, nn::Gradients::zeros_like(critic.params)};
  auto fwd = nn::forward(critic.params, data::scaled_matrix(critic.scaler, s_r));
  std::vector<std::size_t> rows(s_r.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const OutputLoss ol = reg_output_loss(fwd.output, rows, a_s, a_t);
  return {ol.loss, nn::backward(critic.params, fwd.cache, ol.grad)};
}

CombinedLoss combined_loss(const Critic& critic, const Batch& batch, const knowledge::DecisionTree* tree,
                           const teacher::TeacherPolicy* teacher, const TrainConfig& config, bool suppress_reg) {
  const nn::Vector y = bellman_targets(critic.target_params, batch, config.gamma);
  auto fwd = nn::forward(critic.params, batch.x);
  CombinedLoss out;
  OutputLoss ol = cql_output_loss(fwd.output, y, batch.actions, config.alpha);
  out.cql = ol.loss;
  out.loss = ol.loss;
  if (tree && teacher) out.matching = collect_matching(batch, fwd.output, *tree, *teacher);
  if (config.lambda > 0.0 && !suppress_reg && !out.matching.empty()) {
    const OutputLoss reg = reg_output_loss(fwd.output, out.matching.rows, out.matching.a_s, out.matching.a_t);
    out.reg = reg.loss;
    out.reg_applied = true;
    out.loss += config.lambda * reg.loss;
    ol.grad += config.lambda * reg.grad;
  }
  if (!std::isfinite(out.loss)) throw TrainingError("training loss is not finite");
  out.grads = nn::backward(critic.params, fwd.cache, ol.grad);
  return out;
}

bool gate_decision(double mean_q_s, double mean_q_t, double var_s, double var_t) {
  return mean_q_s > mean_q_t && var_s < var_t;
}

GateStats gate_condition(const Critic& critic, const std::vector<Observation>& s_r, std::span<const int> a_s,
                         std::span<const int> a_t, int passes, Rng& rng) {
  GateStats g;
  if (s_r.empty()) return g;
  if (s_r.size() != a_s.size() || s_r.size() != a_t.size()) throw ShapeError("gate lists differ in length");
  const nn::Matrix x = data::scaled_matrix(critic.scaler, s_r);
  const nn::Matrix q = nn::predict(critic.params, x);
  const nn::McStats mc = nn::mc_stats(critic.params, x, passes, rng);
  const double inv_n = 1.0 / static_cast<double>(s_r.size());
  for (std::size_t i = 0; i < s_r.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    g.mean_q_s += q(r, a_s[i]) * inv_n;
    g.mean_q_t += q(r, a_t[i]) * inv_n;
    g.var_s += mc.variance(r, a_s[i]) * inv_n;
    g.var_t += mc.variance(r, a_t[i]) * inv_n;
  }
  g.fired = gate_decision(g.mean_q_s, g.mean_q_t, g.var_s, g.var_t);
  return g;
}

void soft_update(nn::MlpParams& target, const nn::MlpParams& online, double tau) {
  if (target.layer_sizes != online.layer_sizes) throw ShapeError("soft update between networks of different shapes");
  if (tau == 1.0) {
    for (std::size_t l = 0; l < target.layers.size(); ++l) target.layers[l] = online.layers[l];
    return;
  }
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight = tau * online.layers[l].weight + (1.0 - tau) * target.layers[l].weight;
    target.layers[l].bias = tau * online.layers[l].bias + (1.0 - tau) * target.layers[l].bias;
  }
}

}  // namespace exid::train
