#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "exid/data/dataset.hpp"
#include "exid/knowledge/tree.hpp"
#include "exid/teacher/teacher.hpp"
#include "exid/train/critic.hpp"
#include "exid/train/losses.hpp"
#include "exid/train/train_log.hpp"

namespace exid::train {

/// Called every config.eval_every steps with the current critic; returns a mean evaluation reward.
using EvalHook = std::function<double(const Critic&)>;

struct ExidResult {
  Critic critic;
  std::optional<teacher::TeacherPolicy> teacher;
  TrainLog log;
};

/// Offline training with the domain regularizer and gated teacher refinement.
/// Random streams: "init" for the critic, "batch" for minibatches, "dropout" for MC passes.
ExidResult train_exid(const data::Dataset& dataset, const teacher::TeacherPolicy& teacher,
                      const knowledge::DecisionTree& tree, const TrainConfig& config, std::uint64_t seed,
                      const EvalHook& eval = {});

/// The same loop without teacher, tree or regularizer.
ExidResult train_cql(const data::Dataset& dataset, const TrainConfig& config, std::uint64_t seed,
                     const EvalHook& eval = {});

}  // namespace exid::train
