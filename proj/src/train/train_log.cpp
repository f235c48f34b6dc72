#include "exid/train/train_log.hpp"

#include <fstream>
#include <ostream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"

namespace exid::train {

bool TrainLog::consistent() const {
  const std::size_t n = combined_loss.size();
  return cql_loss.size() == n && reg_loss.size() == n && reg_contribution.size() == n && matched.size() == n &&
         gate_checked.size() == n && gate_fired.size() == n && teacher_updates.size() == n &&
         eval_steps.size() == eval_rewards.size();
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "step,cql_loss,reg_loss,combined_loss,reg_contribution,matched,gate_checked,gate_fired,teacher_updates\n";
  for (std::size_t i = 0; i < steps(); ++i) {
    out << (i + 1) << ',' << format_double(cql_loss[i]) << ',' << format_double(reg_loss[i]) << ','
        << format_double(combined_loss[i]) << ',' << format_double(reg_contribution[i]) << ',' << matched[i] << ','
        << (gate_checked[i] ? 1 : 0) << ',' << (gate_fired[i] ? 1 : 0) << ',' << teacher_updates[i] << '\n';
  }
}

void TrainLog::write_eval_csv(std::ostream& out) const {
  out << "step,eval_reward\n";
  for (std::size_t i = 0; i < eval_steps.size(); ++i) out << eval_steps[i] << ',' << format_double(eval_rewards[i]) << '\n';
}

namespace {

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  fn(out);
}

}  // namespace

void TrainLog::save_csv(const std::filesystem::path& path) const {
  write_file(path, [&](std::ostream& o) { write_csv(o); });
}

void TrainLog::save_eval_csv(const std::filesystem::path& path) const {
  write_file(path, [&](std::ostream& o) { write_eval_csv(o); });
}

}  // namespace exid::train
