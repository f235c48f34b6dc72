#pragma once

#include <span>
#include <vector>

#include "exid/knowledge/tree.hpp"
#include "exid/teacher/teacher.hpp"
#include "exid/train/critic.hpp"

namespace exid::train {

/// Loss value and its gradient with respect to the network output rows of a batch.
struct OutputLoss {
  double loss = 0.0;
  nn::Matrix grad;
};

struct LossResult {
  double loss = 0.0;
  nn::Gradients grads;  // with respect to the online parameters only
};

struct CqlLoss {
  double loss = 0.0;
  double conservative = 0.0;  // alpha * mean(logsumexp Q - Q[a])
  double bellman = 0.0;       // 0.5 * mean((Q[a] - y)^2)
  nn::Gradients grads;
};

/// Bellman targets y = r + gamma * max_a' Q_target(s', a'), y = r on terminal transitions.
nn::Vector bellman_targets(const nn::MlpParams& target, const Batch& batch, double gamma);

/// CQL loss on precomputed online Q-values `q` (rows = batch).
OutputLoss cql_output_loss(const nn::Matrix& q, const nn::Vector& targets, std::span<const int> actions, double alpha,
                           double* conservative = nullptr, double* bellman = nullptr);

/// Throws TrainingError on a non-finite loss.
CqlLoss cql_loss(const Critic& critic, const Batch& batch, double alpha, double gamma);

/// States of the batch satisfying the tree where teacher and critic greedy actions disagree, in batch order.
struct Matching {
  std::vector<std::size_t> rows;  // positions in the batch
  std::vector<Observation> states;
  std::vector<int> a_s;  // critic greedy actions
  std::vector<int> a_t;  // teacher actions

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
};

Matching collect_matching(const Batch& batch, const nn::Matrix& q, const knowledge::DecisionTree& tree,
                          const teacher::TeacherPolicy& teacher);
Matching collect_matching(const Batch& batch, const knowledge::DecisionTree& tree, const Critic& critic,
                          const teacher::TeacherPolicy& teacher);

/// mean over rows of (Q[row, a_s] - Q[row, a_t])^2, gradient through both entries.
OutputLoss reg_output_loss(const nn::Matrix& q, std::span<const std::size_t> rows, std::span<const int> a_s,
                           std::span<const int> a_t);
/// Zero for empty lists.
LossResult reg_loss(const Critic& critic, const std::vector<Observation>& s_r, std::span<const int> a_s,
                    std::span<const int> a_t);

struct CombinedLoss {
  double loss = 0.0;
  double cql = 0.0;
  double reg = 0.0;  // regularizer value before weighting; zero when suppressed
  bool reg_applied = false;
  Matching matching;
  nn::Gradients grads;
};

/// L_cql + lambda * L_r on one forward pass. With `suppress_reg` (teacher-update step) or
/// lambda = 0 the regularizer contributes nothing and the result equals cql_loss exactly.
CombinedLoss combined_loss(const Critic& critic, const Batch& batch, const knowledge::DecisionTree* tree,
                           const teacher::TeacherPolicy* teacher, const TrainConfig& config, bool suppress_reg = false);

struct GateStats {
  double mean_q_s = 0.0;
  double mean_q_t = 0.0;
  double var_s = 0.0;
  double var_t = 0.0;
  bool fired = false;
};

/// Strict comparison: higher mean Q and lower mean variance for the critic actions.
bool gate_decision(double mean_q_s, double mean_q_t, double var_s, double var_t);
/// Means from deterministic forwards, variances from T MC-dropout passes. Empty s_r gives fired = false.
GateStats gate_condition(const Critic& critic, const std::vector<Observation>& s_r, std::span<const int> a_s,
                         std::span<const int> a_t, int passes, Rng& rng);

/// target <- tau * online + (1 - tau) * target
void soft_update(nn::MlpParams& target, const nn::MlpParams& online, double tau);

}  // namespace exid::train
