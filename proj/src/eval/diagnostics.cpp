#include "exid/eval/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/nn/functional.hpp"

namespace exid::eval {

std::vector<QDivergenceRow> q_divergence(const train::Critic& critic, const data::Dataset& reference,
                                         const std::optional<knowledge::Predicate>& region) {
  data::require_env(reference, critic.env_id);
  std::vector<Observation> states;
  std::vector<int> expert;
  for (const auto& t : reference.transitions) {
    if (region && !region->holds(t.s)) continue;
    states.push_back(t.s);
    expert.push_back(t.a);
  }
  std::vector<QDivergenceRow> rows;
  if (states.empty()) return rows;
  const nn::Matrix q = critic.q_batch(states);
  rows.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int greedy = nn::argmax_row(q, r);
    rows.push_back({states[i], expert[i], greedy, q(r, expert[i]) - q(r, greedy)});
  }
  return rows;
}

double mean_abs_divergence(const std::vector<QDivergenceRow>& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += std::abs(r.diff);
  return s / static_cast<double>(rows.size());
}

void write_q_divergence_csv(std::ostream& out, const std::vector<QDivergenceRow>& rows, int obs_dim) {
  for (int d = 0; d < obs_dim; ++d) out << 's' << d << ',';
  out << "expert_action,greedy_action,diff\n";
  for (const auto& r : rows) {
    for (double v : r.state) out << format_double(v) << ',';
    out << r.expert_action << ',' << r.greedy_action << ',' << format_double(r.diff) << '\n';
  }
}

void save_q_divergence_csv(const std::filesystem::path& path, const std::vector<QDivergenceRow>& rows, int obs_dim) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  write_q_divergence_csv(out, rows, obs_dim);
}

}  // namespace exid::eval
