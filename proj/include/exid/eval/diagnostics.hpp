#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/knowledge/tree.hpp"
#include "exid/train/critic.hpp"

namespace exid::eval {

struct QDivergenceRow {
  Observation state;
  int expert_action = 0;
  int greedy_action = 0;
  double diff = 0.0;  // Q(s, expert) - Q(s, greedy), never positive
};

/// One row per reference transition whose s satisfies `region` (every transition when absent).
std::vector<QDivergenceRow> q_divergence(const train::Critic& critic, const data::Dataset& reference,
                                         const std::optional<knowledge::Predicate>& region);

/// Mean of |diff|; zero for an empty table.
double mean_abs_divergence(const std::vector<QDivergenceRow>& rows);

/// s0..s{d-1},expert_action,greedy_action,diff
void write_q_divergence_csv(std::ostream& out, const std::vector<QDivergenceRow>& rows, int obs_dim);
void save_q_divergence_csv(const std::filesystem::path& path, const std::vector<QDivergenceRow>& rows, int obs_dim);

}  // namespace exid::eval
