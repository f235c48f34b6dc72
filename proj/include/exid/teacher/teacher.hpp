#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exid/env/environment.hpp"
#include "exid/knowledge/tree.hpp"
#include "exid/nn/mlp.hpp"

namespace exid::teacher {

/// Actor network distilled from a decision tree; outputs action logits for scaled observations.
struct TeacherPolicy {
  std::string env_id;
  nn::MlpParams params;
  std::vector<double> loss_curve;  // full-batch training loss after each accepted epoch
  std::size_t sample_count = 0;
  double holdout_agreement = 0.0;
  std::size_t update_count = 0;

  nn::Matrix logits(const nn::Matrix& scaled_states) const;
  /// Softmax probabilities, one row per state.
  nn::Matrix probabilities(const std::vector<Observation>& states) const;
};

struct TeacherConfig {
  std::vector<int> hidden{256, 256};
  double lr = 1e-3;
  int batch_size = 128;
  int max_epochs = 200;
  double early_stop_agreement = 0.99;
  double required_agreement = 0.95;
  double holdout_fraction = 0.1;
};

/// Gym environments: i.i.d. uniform over the observation bounds. Grid worlds: distinct observations
/// visited by uniformly random rollouts, stopping early once exploration stops producing new ones.
std::vector<Observation> sample_synthetic_states(const std::string& env_id, std::size_t n, Rng& rng);

/// Behavior cloning on tree labels (random labels where the tree does not match).
/// Throws TrainingError when held-out agreement on matched states stays below config.required_agreement.
TeacherPolicy train_teacher_bc(const knowledge::DecisionTree& tree, const std::vector<Observation>& states,
                               const TeacherConfig& config, std::uint64_t seed);

/// Greedy action; ties go to the lowest index.
int teacher_action(const TeacherPolicy& teacher, std::span<const double> s);
std::vector<int> teacher_actions(const TeacherPolicy& teacher, const nn::Matrix& scaled_states);

struct LossWithGrads {
  double loss = 0.0;
  nn::Gradients grads;
};

/// Mean cross-entropy of softmax(logits) against integer labels.
LossWithGrads bc_loss(const nn::MlpParams& params, const nn::Matrix& scaled_states, std::span<const int> labels);

/// -sum_s sum_a softmax(critic_q)(s, a) * log softmax(teacher logits)(s, a).
LossWithGrads distillation_loss(const nn::MlpParams& teacher, const nn::Matrix& scaled_states,
                                const nn::Matrix& critic_q);

/// One plain gradient step of distillation_loss towards the critic's softmax. Empty `states` is a no-op.
/// Returns the loss before the step.
double update_teacher(TeacherPolicy& teacher, const nn::Matrix& critic_q, const std::vector<Observation>& states,
                      double lr);

void save_teacher(const std::filesystem::path& path, const TeacherPolicy& teacher);
/// Throws EnvMismatchError when `expected_env` is given and differs.
TeacherPolicy load_teacher(const std::filesystem::path& path, const std::string& expected_env = {});

}  // namespace exid::teacher
