#pragma once

#include <cstdint>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/data/q_policy.hpp"

namespace exid::data {

/// n transitions from greedy rollouts of `policy`.
Dataset generate_expert(const QPolicy& policy, std::size_t n, std::uint64_t seed);

/// As generate_expert, but each action is replaced by a uniformly random one with probability epsilon.
/// The exploration coin uses its own stream, so epsilon = 0 reproduces generate_expert exactly.
Dataset generate_noisy(const QPolicy& policy, double epsilon, std::size_t n, std::uint64_t seed);

/// The first n transitions of an online training log. Throws UsageError when the log is shorter.
Dataset generate_replay(const std::string& env_id, const std::vector<Transition>& log, std::size_t n,
                        std::uint64_t seed);

}  // namespace exid::data
