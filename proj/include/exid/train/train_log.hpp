#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace exid::train {

/// Per-step training scalars plus sparse evaluation results.
struct TrainLog {
  std::vector<double> cql_loss;
  std::vector<double> reg_loss;
  std::vector<double> combined_loss;
  std::vector<double> reg_contribution;  // lambda * reg / combined
  std::vector<int> matched;
  std::vector<bool> gate_checked;
  std::vector<bool> gate_fired;
  std::vector<long> teacher_updates;  // cumulative
  std::vector<long> eval_steps;
  std::vector<double> eval_rewards;

  std::size_t steps() const { return combined_loss.size(); }
  bool consistent() const;

  /// step,cql_loss,reg_loss,combined_loss,reg_contribution,matched,gate_checked,gate_fired,teacher_updates
  void write_csv(std::ostream& out) const;
  /// step,eval_reward
  void write_eval_csv(std::ostream& out) const;
  void save_csv(const std::filesystem::path& path) const;
  void save_eval_csv(const std::filesystem::path& path) const;
};

}  // namespace exid::train
