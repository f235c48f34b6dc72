#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "exid/data/dataset.hpp"

namespace exid::train {

struct TrainConfig {
  double lambda = 0.5;
  int warm_start_k = 30;  // episodes
  double alpha = 0.1;
  double tau = 0.005;
  double gamma = 0.99;
  double lr = 1e-4;
  double teacher_lr = 1e-4;
  int batch_size = 32;
  long total_steps = 42000;
  int mc_passes_T = 10;
  int gate_check_every = 15;  // episodes
  int steps_per_episode = 100;
  double dropout = 0.5;
  std::vector<int> hidden{256, 256};
  double max_grad_norm = 10.0;
  bool update_teacher = true;           // false disables the gate and teacher refinement
  bool regularize_after_warmup = true;  // false drops the regularizer once the warm start ends
  long eval_every = 0;                  // steps between evaluation hook calls; 0 disables
  int eval_episodes = 10;

  /// Table defaults for an environment and dataset kind.
  static TrainConfig defaults_for(const std::string& env_id, data::DatasetKind kind = data::DatasetKind::expert);

  long warm_start_steps() const { return static_cast<long>(warm_start_k) * steps_per_episode; }
  long gate_period_steps() const { return static_cast<long>(gate_check_every) * steps_per_episode; }

  /// Throws UsageError naming the first field outside its range.
  void validate() const;

  /// Assigns one field from text. Throws UsageError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);
  /// key = value lines, one field per line.
  std::string to_text() const;

  bool operator==(const TrainConfig&) const = default;
};

/// Applies `key = value` lines onto `base`; blank lines and lines starting with # are ignored.
/// Throws ParseError with the line number.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace exid::train
