#include "exid/knowledge/tree.hpp"

#include <algorithm>
#include <functional>

#include "exid/common/error.hpp"

namespace exid::knowledge {

const char* comparator_symbol(Comparator cmp) {
  switch (cmp) {
    case Comparator::less:
      return "<";
    case Comparator::greater:
      return ">";
    case Comparator::less_equal:
      return "<=";
    case Comparator::greater_equal:
      return ">=";
  }
  return "?";
}

bool Condition::holds(std::span<const double> s) const {
  if (feature < 0 || static_cast<std::size_t>(feature) >= s.size()) {
    throw TreeDefinitionError("condition refers to feature " + std::to_string(feature) +
                              " but the observation has " + std::to_string(s.size()) + " features");
  }
  const double v = s[static_cast<std::size_t>(feature)];
  switch (cmp) {
    case Comparator::less:
      return v < threshold;
    case Comparator::greater:
      return v > threshold;
    case Comparator::less_equal:
      return v <= threshold;
    case Comparator::greater_equal:
      return v >= threshold;
  }
  return false;
}

bool Predicate::holds(std::span<const double> s) const {
  return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(s); });
}

Vocabulary Vocabulary::for_env(const EnvSpec& spec) {
  return {spec.env_id, spec.obs_dim, spec.n_actions, spec.feature_names, spec.action_names};
}

std::optional<int> Vocabulary::feature_index(const std::string& name) const {
  for (const auto& [n, i] : features) {
    if (n == name) return i;
  }
  if (name.size() > 1 && name[0] == 'x' && std::all_of(name.begin() + 1, name.end(), ::isdigit)) {
    const int idx = std::stoi(name.substr(1));
    if (obs_dim <= 0 || idx < obs_dim) return idx;
  }
  return std::nullopt;
}

std::optional<int> Vocabulary::action_index(const std::string& name) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] == name) return static_cast<int>(i);
  }
  if (!name.empty() && std::all_of(name.begin(), name.end(), ::isdigit)) {
    const int idx = std::stoi(name);
    if (n_actions <= 0 || idx < n_actions) return idx;
  }
  return std::nullopt;
}

std::string Vocabulary::feature_name(int index) const {
  for (const auto& [n, i] : features) {
    if (i == index) return n;
  }
  return "x" + std::to_string(index);
}

std::string Vocabulary::action_name(int index) const {
  if (index >= 0 && static_cast<std::size_t>(index) < actions.size()) return actions[static_cast<std::size_t>(index)];
  return std::to_string(index);
}

DecisionTree::DecisionTree(Vocabulary vocabulary, Predicate guard, std::vector<TreeNode> nodes)
    : vocabulary_(std::move(vocabulary)), guard_(std::move(guard)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw TreeDefinitionError("a decision tree needs at least one node");
  auto check_condition = [&](const Condition& c) {
    if (c.feature < 0 || (vocabulary_.obs_dim > 0 && c.feature >= vocabulary_.obs_dim)) {
      throw TreeDefinitionError("feature index " + std::to_string(c.feature) + " out of range for " +
                                vocabulary_.env_id);
    }
  };
  for (const auto& c : guard_.conditions) check_condition(c);

  // Every node must be reachable exactly once from the root (a proper binary tree).
  std::vector<int> seen(nodes_.size(), 0);
  std::function<void(int)> visit = [&](int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw TreeDefinitionError("child index out of range");
    if (seen[static_cast<std::size_t>(id)]++) throw TreeDefinitionError("node reachable along two paths");
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      if (node.action && (*node.action < 0 || (vocabulary_.n_actions > 0 && *node.action >= vocabulary_.n_actions))) {
        throw TreeDefinitionError("leaf action " + std::to_string(*node.action) + " out of range for " +
                                  vocabulary_.env_id);
      }
      return;
    }
    check_condition(*node.condition);
    visit(node.true_child);
    visit(node.false_child);
  };
  visit(0);
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw TreeDefinitionError("tree has unreachable nodes");
}

bool DecisionTree::operator==(const DecisionTree& other) const {
  if (vocabulary_ != other.vocabulary_ || guard_ != other.guard_) return false;
  std::function<bool(int, int)> same = [&](int a, int b) {
    const auto& x = nodes_[static_cast<std::size_t>(a)];
    const auto& y = other.nodes_[static_cast<std::size_t>(b)];
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.is_leaf()) return x.action == y.action;
    return *x.condition == *y.condition && same(x.true_child, y.true_child) && same(x.false_child, y.false_child);
  };
  return same(0, 0);
}

int DecisionTree::depth() const {
  std::function<int(int)> rec = [&](int id) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) return 1;
    return 1 + std::max(rec(n.true_child), rec(n.false_child));
  };
  return rec(0);
}

void DecisionTree::check_observation(std::span<const double> s) const {
  if (vocabulary_.obs_dim > 0 && static_cast<int>(s.size()) != vocabulary_.obs_dim) {
    throw ShapeError("observation has " + std::to_string(s.size()) + " features, tree for " + vocabulary_.env_id +
                     " expects " + std::to_string(vocabulary_.obs_dim));
  }
}

int DecisionTree::traverse(std::span<const double> s, std::vector<int>* path) const {
  int id = 0;
  while (true) {
    if (path) path->push_back(id);
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return id;
    id = node.condition->holds(s) ? node.true_child : node.false_child;
  }
}

bool DecisionTree::satisfies(std::span<const double> s) const {
  check_observation(s);
  if (!guard_.holds(s)) return false;
  return nodes_[static_cast<std::size_t>(traverse(s, nullptr))].action.has_value();
}

RuleDecision DecisionTree::rule_action(std::span<const double> s, Rng& rng) const {
  check_observation(s);
  RuleDecision decision;
  if (guard_.holds(s)) {
    const int leaf = traverse(s, &decision.leaf_path);
    if (const auto& a = nodes_[static_cast<std::size_t>(leaf)].action) {
      decision.action = *a;
      decision.matched = true;
      return decision;
    }
  }
  if (vocabulary_.n_actions <= 0) throw UsageError("random fallback needs a known action count");
  decision.action = uniform_int(rng, vocabulary_.n_actions);
  return decision;
}

}  // namespace exid::knowledge
