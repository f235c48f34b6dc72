#include "exid/teacher/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/adam.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/nn/functional.hpp"

namespace exid::teacher {

nn::Matrix TeacherPolicy::logits(const nn::Matrix& scaled_states) const { return nn::predict(params, scaled_states); }

nn::Matrix TeacherPolicy::probabilities(const std::vector<Observation>& states) const {
  const InputScaler scaler(env_spec(env_id));
  return nn::softmax_rows(logits(data::scaled_matrix(scaler, states)));
}

std::vector<Observation> sample_synthetic_states(const std::string& env_id, std::size_t n, Rng& rng) {
  if (n == 0) throw UsageError("number of synthetic states must be positive");
  const EnvSpec& spec = env_spec(env_id);
  std::vector<Observation> out;
  out.reserve(n);
  if (!spec.discrete_observations) {
    for (std::size_t i = 0; i < n; ++i) {
      Observation s(spec.obs_bounds.size());
      for (std::size_t d = 0; d < s.size(); ++d) s[d] = uniform_real(rng, spec.obs_bounds[d].low, spec.obs_bounds[d].high);
      out.push_back(std::move(s));
    }
    return out;
  }

  auto env = make_environment(env_id);
  std::set<Observation> seen;
  auto add = [&](const Observation& s) {
    if (seen.insert(s).second) out.push_back(s);
  };
  const std::size_t patience = std::max<std::size_t>(20000, 10 * n);
  std::size_t since_new = 0;
  while (out.size() < n && since_new < patience) {
    Observation s = env->reset(rng());
    const std::size_t before = out.size();
    add(s);
    for (;;) {
      const StepResult st = env->step(uniform_int(rng, spec.n_actions));
      ++since_new;
      if (out.size() < n) add(st.observation);
      if (out.size() > before) since_new = 0;
      if (st.done || st.truncated || out.size() >= n) break;
    }
  }
  return out;
}

LossWithGrads bc_loss(const nn::MlpParams& params, const nn::Matrix& scaled_states, std::span<const int> labels) {
  auto fwd = nn::forward(params, scaled_states);
  const nn::LossAndGrad lg = nn::cross_entropy_labels(fwd.output, labels);
  return {lg.loss, nn::backward(params, fwd.cache, lg.grad)};
}

LossWithGrads distillation_loss(const nn::MlpParams& teacher, const nn::Matrix& scaled_states,
                                const nn::Matrix& critic_q) {
  if (critic_q.rows() != scaled_states.rows() || critic_q.cols() != teacher.output_dim()) {
    throw ShapeError("critic Q-values do not match the teacher batch");
  }
  auto fwd = nn::forward(teacher, scaled_states);
  const nn::Matrix target = nn::softmax_rows(critic_q);
  const nn::Matrix log_p = nn::log_softmax_rows(fwd.output);
  const double loss = -(target.array() * log_p.array()).sum();
  const nn::Matrix grad = log_p.array().exp().matrix() - target;
  return {loss, nn::backward(teacher, fwd.cache, grad)};
}

namespace {

double agreement(const nn::MlpParams& params, const nn::Matrix& x, const std::vector<int>& labels) {
  if (labels.empty()) return 1.0;
  const nn::Matrix out = nn::predict(params, x);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) hits += nn::argmax_row(out, i) == labels[static_cast<std::size_t>(i)];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

nn::Matrix gather_rows(const nn::Matrix& m, const std::vector<std::size_t>& rows) {
  nn::Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

TeacherPolicy train_teacher_bc(const knowledge::DecisionTree& tree, const std::vector<Observation>& states,
                               const TeacherConfig& config, std::uint64_t seed) {
  if (states.empty()) throw UsageError("teacher training needs at least one state");
  if (config.max_epochs <= 0 || config.batch_size <= 0 || !(config.lr > 0.0)) {
    throw UsageError("teacher epochs, batch size and learning rate must be positive");
  }
  const std::string& env_id = tree.env_id();
  const EnvSpec& spec = env_spec(env_id);
  const InputScaler scaler(spec);
  const nn::Matrix x = data::scaled_matrix(scaler, states);

  Rng label_rng = make_rng(seed, "teacher.labels");
  std::vector<int> labels(states.size());
  std::vector<bool> matched(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto decision = tree.rule_action(states[i], label_rng);
    labels[i] = decision.action;
    matched[i] = decision.matched;
  }

  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(seed, "teacher.split");
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_holdout = static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(states.size()));
  if (states.size() < 2) n_holdout = 0;
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_holdout), order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());

  std::vector<std::size_t> holdout_matched;
  for (std::size_t i : holdout) {
    if (matched[i]) holdout_matched.push_back(i);
  }
  // Without a held-out set, agreement is measured on the matched training states.
  if (holdout_matched.empty()) {
    for (std::size_t i : train) {
      if (matched[i]) holdout_matched.push_back(i);
    }
  }
  const nn::Matrix x_train = gather_rows(x, train);
  std::vector<int> y_train;
  for (std::size_t i : train) y_train.push_back(labels[i]);
  const nn::Matrix x_eval = gather_rows(x, holdout_matched);
  std::vector<int> y_eval;
  for (std::size_t i : holdout_matched) y_eval.push_back(labels[i]);

  std::vector<int> sizes{spec.obs_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(spec.n_actions);
  Rng init_rng = make_rng(seed, "teacher.init");
  TeacherPolicy teacher{env_id, nn::MlpParams::lecun_normal(sizes, 0.0, init_rng), {}, states.size(), 0.0, 0};
  nn::AdamState adam = nn::AdamState::for_params(teacher.params);
  Rng batch_rng = make_rng(seed, "teacher.batch");

  double lr = config.lr;
  double current_loss = bc_loss(teacher.params, x_train, y_train).loss;
  teacher.holdout_agreement = agreement(teacher.params, x_eval, y_eval);
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.max_epochs && teacher.holdout_agreement < config.early_stop_agreement; ++epoch) {
    const nn::MlpParams snapshot = teacher.params;
    const nn::AdamState adam_snapshot = adam;
    std::shuffle(idx.begin(), idx.end(), batch_rng);
    for (std::size_t start = 0; start < idx.size(); start += batch) {
      const std::size_t end = std::min(idx.size(), start + batch);
      nn::Matrix xb(static_cast<Eigen::Index>(end - start), x_train.cols());
      std::vector<int> yb;
      for (std::size_t k = start; k < end; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = x_train.row(static_cast<Eigen::Index>(idx[k]));
        yb.push_back(y_train[idx[k]]);
      }
      LossWithGrads lg = bc_loss(teacher.params, xb, yb);
      nn::clip_global_norm(lg.grads, 10.0);
      nn::adam_step(teacher.params, lg.grads, adam, lr);
    }
    const double loss = bc_loss(teacher.params, x_train, y_train).loss;
    if (!std::isfinite(loss)) throw TrainingError("teacher loss became non-finite");
    if (loss > current_loss) {
      // Reject the epoch and retry with a smaller step, which keeps the training loss non-increasing.
      teacher.params = snapshot;
      adam = adam_snapshot;
      lr *= 0.5;
      teacher.loss_curve.push_back(current_loss);
      continue;
    }
    current_loss = loss;
    teacher.loss_curve.push_back(loss);
    teacher.holdout_agreement = agreement(teacher.params, x_eval, y_eval);
  }
  if (teacher.holdout_agreement < config.required_agreement) {
    throw TrainingError("teacher reached only " + format_double(teacher.holdout_agreement) +
                        " held-out agreement with the tree (required " + format_double(config.required_agreement) +
                        ")");
  }
  return teacher;
}

int teacher_action(const TeacherPolicy& teacher, std::span<const double> s) {
  const InputScaler scaler(env_spec(teacher.env_id));
  const nn::Vector out = nn::predict(teacher.params, data::scaled_vector(scaler, s));
  return nn::argmax(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

std::vector<int> teacher_actions(const TeacherPolicy& teacher, const nn::Matrix& scaled_states) {
  const nn::Matrix out = teacher.logits(scaled_states);
  std::vector<int> actions(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) actions[static_cast<std::size_t>(i)] = nn::argmax_row(out, i);
  return actions;
}

double update_teacher(TeacherPolicy& teacher, const nn::Matrix& critic_q, const std::vector<Observation>& states,
                      double lr) {
  if (states.empty()) return 0.0;
  if (lr < 0.0) throw UsageError("teacher learning rate must be non-negative");
  const InputScaler scaler(env_spec(teacher.env_id));
  LossWithGrads lg = distillation_loss(teacher.params, data::scaled_matrix(scaler, states), critic_q);
  if (!std::isfinite(lg.loss) || !lg.grads.all_finite()) throw TrainingError("teacher update produced non-finite values");
  for (std::size_t l = 0; l < teacher.params.layers.size(); ++l) {
    teacher.params.layers[l].weight -= lr * lg.grads.layers[l].weight;
    teacher.params.layers[l].bias -= lr * lg.grads.layers[l].bias;
  }
  ++teacher.update_count;
  return lg.loss;
}

void save_teacher(const std::filesystem::path& path, const TeacherPolicy& teacher) {
  nn::Checkpoint ck{teacher.params,
                    {{"env_id", teacher.env_id},
                     {"role", "teacher"},
                     {"sample_count", std::to_string(teacher.sample_count)},
                     {"holdout_agreement", format_double(teacher.holdout_agreement)}}};
  nn::save_checkpoint(path, ck);
}

TeacherPolicy load_teacher(const std::filesystem::path& path, const std::string& expected_env) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  const auto env = ck.meta.find("env_id");
  if (env == ck.meta.end()) throw UsageError(path.string() + " has no env_id");
  if (!expected_env.empty() && env->second != expected_env) {
    throw EnvMismatchError("teacher " + path.string() + " belongs to '" + env->second + "', not '" + expected_env + "'");
  }
  const EnvSpec& spec = env_spec(env->second);
  if (ck.params.input_dim() != spec.obs_dim || ck.params.output_dim() != spec.n_actions) {
    throw ShapeError("teacher network shape does not match " + env->second);
  }
  TeacherPolicy t{env->second, ck.params, {}, 0, 0.0, 0};
  if (auto it = ck.meta.find("sample_count"); it != ck.meta.end()) t.sample_count = std::stoull(it->second);
  if (auto it = ck.meta.find("holdout_agreement"); it != ck.meta.end()) t.holdout_agreement = parse_double(it->second);
  return t;
}

}  // namespace exid::teacher
