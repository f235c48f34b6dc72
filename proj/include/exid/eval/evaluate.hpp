#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "exid/knowledge/tree.hpp"

namespace exid::eval {

using PolicyFn = std::function<int(std::span<const double>)>;
using MembershipFn = std::function<bool(std::span<const double>)>;

struct EpisodeRecord {
  std::uint64_t seed = 0;
  int episode = 0;
  double reward = 0.0;
  int steps = 0;
  int fallback_steps = 0;
};

struct EvalReport {
  std::string env_id;
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeRecord> episodes;  // ordered by (seed, episode)

  std::vector<double> rewards() const;
  double mean() const;
  /// Population standard deviation over all episodes.
  double stddev() const;
  long total_steps() const;
  long fallback_steps() const;

  /// label,seed,episode,reward,steps,fallback_steps
  void write_csv(std::ostream& out) const;
  void save_csv(const std::filesystem::path& path) const;
};

/// Undiscounted returns over `episodes` episodes for each seed. Episode e of seed s resets
/// from derive_seed(derive_seed(s, "eval"), e).
EvalReport evaluate_policy(const std::string& env_id, const PolicyFn& policy, int episodes,
                           std::span<const std::uint64_t> seeds, const std::string& label = "policy");

/// Acts with the rule tree wherever `in_buffer` is false and with `policy` elsewhere.
EvalReport evaluate_with_fallback(const std::string& env_id, const PolicyFn& policy,
                                  const knowledge::DecisionTree& tree, const MembershipFn& in_buffer, int episodes,
                                  std::span<const std::uint64_t> seeds, const std::string& label = "policy-D");

/// The tree on its own, with random fallback on unmatched states.
EvalReport evaluate_rule(const knowledge::DecisionTree& tree, int episodes, std::span<const std::uint64_t> seeds,
                         const std::string& label = "D");

}  // namespace exid::eval
