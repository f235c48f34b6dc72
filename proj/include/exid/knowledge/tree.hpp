#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exid/common/rng.hpp"
#include "exid/env/environment.hpp"

namespace exid::knowledge {

enum class Comparator { less, greater, less_equal, greater_equal };

const char* comparator_symbol(Comparator cmp);

/// A single threshold test phi on one observation feature.
struct Condition {
  int feature = 0;
  Comparator cmp = Comparator::less;
  double threshold = 0.0;

  bool holds(std::span<const double> s) const;
  bool operator==(const Condition&) const = default;
};

/// Conjunction of conditions; the empty conjunction always holds.
struct Predicate {
  std::vector<Condition> conditions;

  bool holds(std::span<const double> s) const;
  bool operator==(const Predicate&) const = default;
};

/// Names used when parsing and printing a tree for one environment.
struct Vocabulary {
  std::string env_id;
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<std::pair<std::string, int>> features;
  std::vector<std::string> actions;

  static Vocabulary for_env(const EnvSpec& spec);
  std::optional<int> feature_index(const std::string& name) const;
  std::optional<int> action_index(const std::string& name) const;
  std::string feature_name(int index) const;
  std::string action_name(int index) const;
  bool operator==(const Vocabulary&) const = default;
};

/// Internal nodes hold a condition and two children; leaves hold an action or nothing (empty leaf).
struct TreeNode {
  std::optional<Condition> condition;
  int true_child = -1;
  int false_child = -1;
  std::optional<int> action;

  bool is_leaf() const { return !condition.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

struct RuleDecision {
  int action = 0;
  bool matched = false;        // the guard held and a non-empty leaf was reached
  std::vector<int> leaf_path;  // node ids from the root to the reached leaf
};

/// Domain-knowledge decision tree. Node 0 is the root. Immutable once built.
class DecisionTree {
 public:
  DecisionTree(Vocabulary vocabulary, Predicate guard, std::vector<TreeNode> nodes);

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const Predicate& guard() const { return guard_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::string& env_id() const { return vocabulary_.env_id; }
  int depth() const;

  /// s |= D: the guard holds and traversal ends in a non-empty leaf.
  bool satisfies(std::span<const double> s) const;
  /// Leaf action when matched; otherwise a uniformly random action drawn from `rng`.
  RuleDecision rule_action(std::span<const double> s, Rng& rng) const;

  /// Structural equality: same vocabulary, guard, and tree shape/contents (node numbering ignored).
  bool operator==(const DecisionTree& other) const;

 private:
  /// Returns the node id of the leaf reached by s, recording the path when requested.
  int traverse(std::span<const double> s, std::vector<int>* path) const;
  void check_observation(std::span<const double> s) const;

  Vocabulary vocabulary_;
  Predicate guard_;
  std::vector<TreeNode> nodes_;
};

}  // namespace exid::knowledge
