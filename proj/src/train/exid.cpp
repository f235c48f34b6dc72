#include "exid/train/exid.hpp"

#include "exid/common/error.hpp"

namespace exid::train {
namespace {

ExidResult run(const data::Dataset& dataset, const teacher::TeacherPolicy* teacher_in,
               const knowledge::DecisionTree* tree, const TrainConfig& config, std::uint64_t seed,
               const EvalHook& eval) {
  config.validate();
  dataset.validate();
  if (teacher_in && teacher_in->env_id != dataset.env_id) {
    throw EnvMismatchError("teacher belongs to '" + teacher_in->env_id + "' but the dataset to '" + dataset.env_id + "'");
  }
  if (tree && tree->env_id() != dataset.env_id) {
    throw EnvMismatchError("tree belongs to '" + tree->env_id() + "' but the dataset to '" + dataset.env_id + "'");
  }

  ExidResult result{Critic::create(dataset.env_id, config, seed), std::nullopt, {}};
  if (teacher_in) result.teacher = *teacher_in;
  teacher::TeacherPolicy* teacher = result.teacher ? &*result.teacher : nullptr;
  Critic& critic = result.critic;
  TrainLog& log = result.log;

  Rng batch_rng = make_rng(seed, "batch");
  Rng dropout_rng = make_rng(seed, "dropout");
  const bool guided = teacher && tree;
  const long warm = config.warm_start_steps();
  const long period = config.gate_period_steps();
  long updates = 0;

  for (long step = 1; step <= config.total_steps; ++step) {
    const Batch batch = sample_batch(dataset, config.batch_size, critic.scaler, batch_rng);
    const bool after_warm = step > warm;
    const bool gate_due = guided && config.update_teacher && after_warm && (step - warm) % period == 0;
    const bool reg_allowed = !after_warm || config.regularize_after_warmup;

    TrainConfig step_config = config;
    if (!reg_allowed) step_config.lambda = 0.0;
    // The matching set is computed before the update; the gate and the loss both use it.
    CombinedLoss loss = combined_loss(critic, batch, guided ? tree : nullptr, guided ? teacher : nullptr, step_config,
                                      false);
    bool fired = false;
    if (gate_due && !loss.matching.empty()) {
      const GateStats gate =
          gate_condition(critic, loss.matching.states, loss.matching.a_s, loss.matching.a_t, config.mc_passes_T,
                         dropout_rng);
      if (gate.fired) {
        const nn::Matrix q = critic.q_batch(loss.matching.states);
        teacher::update_teacher(*teacher, q, loss.matching.states, config.teacher_lr);
        ++updates;
        fired = true;
        loss = combined_loss(critic, batch, tree, teacher, step_config, true);
      }
    }

    log.cql_loss.push_back(loss.cql);
    log.reg_loss.push_back(loss.reg);
    log.combined_loss.push_back(loss.loss);
    log.reg_contribution.push_back(loss.loss != 0.0 ? step_config.lambda * loss.reg / loss.loss : 0.0);
    log.matched.push_back(static_cast<int>(loss.matching.size()));
    log.gate_checked.push_back(gate_due);
    log.gate_fired.push_back(fired);
    log.teacher_updates.push_back(updates);

    nn::clip_global_norm(loss.grads, config.max_grad_norm);
    nn::adam_step(critic.params, loss.grads, critic.adam, config.lr);
    soft_update(critic.target_params, critic.params, config.tau);

    if (eval && config.eval_every > 0 && (step % config.eval_every == 0 || step == config.total_steps)) {
      log.eval_steps.push_back(step);
      log.eval_rewards.push_back(eval(critic));
    }
  }
  return result;
}

}  // namespace

ExidResult train_exid(const data::Dataset& dataset, const teacher::TeacherPolicy& teacher,
                      const knowledge::DecisionTree& tree, const TrainConfig& config, std::uint64_t seed,
                      const EvalHook& eval) {
  return run(dataset, &teacher, &tree, config, seed, eval);
}

ExidResult train_cql(const data::Dataset& dataset, const TrainConfig& config, std::uint64_t seed,
                     const EvalHook& eval) {
  TrainConfig c = config;
  c.lambda = 0.0;
  c.update_teacher = false;
  return run(dataset, nullptr, nullptr, c, seed, eval);
}

}  // namespace exid::train
