#pragma once

#include <iosfwd>
#include <vector>

namespace exid::eval {

/// Finite MDP or transition buffer. States and actions are 0-based.
/// For a buffer, counts are visit counts; for a true MDP they may be probabilities.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.9;
  std::vector<double> counts;   // N(s, a, s')
  std::vector<double> rewards;  // r(s, a, s')
  std::vector<bool> terminal;

  static TabularMdp empty(int n_states, int n_actions, double gamma);

  /// Adds `count` observations of (s, a, s') with reward r. Throws UsageError if r conflicts
  /// with a reward already recorded for the same triple.
  void add(int s, int a, int s_next, double r, double count = 1.0);
  double count(int s, int a, int s_next) const;
  double reward(int s, int a, int s_next) const;
  double total(int s, int a) const;
  /// N(s, a, s') / sum N(s, a, .), zero when (s, a) was never observed.
  double probability(int s, int a, int s_next) const;
  void validate() const;

 private:
  std::size_t index(int s, int a, int s_next) const;
};

struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;
  int sweeps = 0;
  bool converged = false;

  double at(int s, int a) const { return values[static_cast<std::size_t>(s * n_actions + a)]; }
  /// Lowest index on ties.
  int greedy(int s) const;
};

/// Synchronous sweeps of Q(s,a) = sum_s' p(s'|s,a) (r + gamma * max_a' Q(s',a')) over observed pairs only;
/// unobserved pairs keep Q = 0. Stops when the sup-norm change drops below 1e-10 or after max_sweeps.
QTable tabular_q_learning(const TabularMdp& buffer, int max_sweeps = 100000);

/// Bellman-optimality iteration on a true MDP to a sup-norm change below 1e-12.
QTable value_iteration(const TabularMdp& mdp, int max_sweeps = 1000000);

/// Three states (1, 2, 3 printed; 0, 1, 2 internally), two actions, state 3 terminal, gamma 0.9.
/// The reduced buffer keeps only transitions out of state 1, which flips the greedy action there.
struct Counterexample {
  TabularMdp true_mdp;
  TabularMdp full_buffer;
  TabularMdp reduced_buffer;
};
Counterexample build_counterexample();

struct CounterexampleResult {
  QTable oracle;
  QTable full;
  QTable reduced;
  int oracle_action = 0;
  int full_action = 0;
  int reduced_action = 0;

  /// The full buffer recovers the optimal action at state 1 and the reduced buffer does not.
  bool demonstrates_suboptimality() const { return full_action == oracle_action && reduced_action != oracle_action; }
};
CounterexampleResult run_counterexample();
void write_counterexample_report(std::ostream& out, const CounterexampleResult& result);

}  // namespace exid::eval
