#include "exid/train/bc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exid/common/error.hpp"
#include "exid/data/batching.hpp"
#include "exid/nn/adam.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/nn/functional.hpp"
#include "exid/teacher/teacher.hpp"

namespace exid::train {

int BcPolicy::act(std::span<const double> s) const {
  const nn::Vector out = nn::predict(params, data::scaled_vector(scaler, s));
  return nn::argmax(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

BcResult train_bc(const data::Dataset& dataset, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  dataset.validate();
  const EnvSpec& spec = env_spec(dataset.env_id);
  const InputScaler scaler(spec);

  std::vector<Observation> states;
  std::vector<int> labels;
  for (const auto& t : dataset.transitions) {
    states.push_back(t.s);
    labels.push_back(t.a);
  }
  const nn::Matrix x = data::scaled_matrix(scaler, states);

  std::vector<int> sizes{spec.obs_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(spec.n_actions);
  Rng init_rng = make_rng(seed, "init");
  BcResult result{BcPolicy{dataset.env_id, nn::MlpParams::lecun_normal(sizes, 0.0, init_rng), scaler}, {}, {}};
  nn::MlpParams& params = result.policy.params;
  nn::AdamState adam = nn::AdamState::for_params(params);
  Rng batch_rng = make_rng(seed, "batch");

  std::vector<std::size_t> idx(states.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);
  double lr = config.lr;
  double current = teacher::bc_loss(params, x, labels).loss;
  long step = 0;
  while (step < config.total_steps) {
    const nn::MlpParams snapshot = params;
    const nn::AdamState adam_snapshot = adam;
    std::shuffle(idx.begin(), idx.end(), batch_rng);
    for (std::size_t start = 0; start < idx.size() && step < config.total_steps; start += batch, ++step) {
      const std::size_t end = std::min(idx.size(), start + batch);
      nn::Matrix xb(static_cast<Eigen::Index>(end - start), x.cols());
      std::vector<int> yb;
      for (std::size_t k = start; k < end; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = x.row(static_cast<Eigen::Index>(idx[k]));
        yb.push_back(labels[idx[k]]);
      }
      auto lg = teacher::bc_loss(params, xb, yb);
      if (!std::isfinite(lg.loss)) throw TrainingError("behavior cloning loss is not finite");
      result.step_loss.push_back(lg.loss);
      nn::clip_global_norm(lg.grads, config.max_grad_norm);
      nn::adam_step(params, lg.grads, adam, lr);
    }
    const double loss = teacher::bc_loss(params, x, labels).loss;
    if (loss > current) {
      params = snapshot;
      adam = adam_snapshot;
      lr *= 0.5;
      result.epoch_loss.push_back(current);
      continue;
    }
    current = loss;
    result.epoch_loss.push_back(loss);
  }
  return result;
}

void save_bc(const std::filesystem::path& path, const BcPolicy& policy) {
  nn::save_checkpoint(path, nn::Checkpoint{policy.params, {{"env_id", policy.env_id}, {"role", "bc"}}});
}

BcPolicy load_bc(const std::filesystem::path& path, const std::string& expected_env) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  const auto it = ck.meta.find("env_id");
  if (it == ck.meta.end()) throw UsageError(path.string() + " has no env_id");
  if (!expected_env.empty() && it->second != expected_env) {
    throw EnvMismatchError("policy " + path.string() + " belongs to '" + it->second + "', not '" + expected_env + "'");
  }
  return BcPolicy{it->second, ck.params, InputScaler(env_spec(it->second))};
}

}  // namespace exid::train
