#include "exid/eval/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"

namespace exid::eval {

TabularMdp TabularMdp::empty(int n_states, int n_actions, double gamma) {
  if (n_states <= 0 || n_actions <= 0) throw UsageError("MDP needs at least one state and action");
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  const auto n = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions) * static_cast<std::size_t>(n_states);
  m.counts.assign(n, 0.0);
  m.rewards.assign(n, 0.0);
  m.terminal.assign(static_cast<std::size_t>(n_states), false);
  return m;
}

std::size_t TabularMdp::index(int s, int a, int s_next) const {
  if (s < 0 || s >= n_states || s_next < 0 || s_next >= n_states || a < 0 || a >= n_actions) {
    throw UsageError("state or action index out of range");
  }
  return (static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) + static_cast<std::size_t>(a)) *
             static_cast<std::size_t>(n_states) +
         static_cast<std::size_t>(s_next);
}

void TabularMdp::add(int s, int a, int s_next, double r, double count) {
  if (count < 0.0) throw UsageError("transition counts must be non-negative");
  const std::size_t i = index(s, a, s_next);
  if (counts[i] > 0.0 && rewards[i] != r) throw UsageError("conflicting rewards for one transition");
  counts[i] += count;
  rewards[i] = r;
}

double TabularMdp::count(int s, int a, int s_next) const { return counts[index(s, a, s_next)]; }
double TabularMdp::reward(int s, int a, int s_next) const { return rewards[index(s, a, s_next)]; }

double TabularMdp::total(int s, int a) const {
  double t = 0.0;
  for (int k = 0; k < n_states; ++k) t += count(s, a, k);
  return t;
}

double TabularMdp::probability(int s, int a, int s_next) const {
  const double t = total(s, a);
  return t > 0.0 ? count(s, a, s_next) / t : 0.0;
}

void TabularMdp::validate() const {
  const auto n = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions) * static_cast<std::size_t>(n_states);
  if (counts.size() != n || rewards.size() != n || terminal.size() != static_cast<std::size_t>(n_states)) {
    throw ShapeError("MDP tables have inconsistent sizes");
  }
  for (double c : counts) {
    if (!(c >= 0.0)) throw UsageError("transition counts must be non-negative");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("gamma must lie in [0, 1]");
}

int QTable::greedy(int s) const {
  int best = 0;
  for (int a = 1; a < n_actions; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

namespace {

QTable iterate(const TabularMdp& m, double tolerance, int max_sweeps) {
  m.validate();
  QTable q{m.n_states, m.n_actions, std::vector<double>(static_cast<std::size_t>(m.n_states * m.n_actions), 0.0), 0,
           false};
  std::vector<double> v(static_cast<std::size_t>(m.n_states), 0.0);
  while (q.sweeps < max_sweeps) {
    for (int s = 0; s < m.n_states; ++s) {
      double best = q.at(s, 0);
      for (int a = 1; a < m.n_actions; ++a) best = std::max(best, q.at(s, a));
      v[static_cast<std::size_t>(s)] = m.terminal[static_cast<std::size_t>(s)] ? 0.0 : best;
    }
    double delta = 0.0;
    std::vector<double> next = q.values;
    for (int s = 0; s < m.n_states; ++s) {
      if (m.terminal[static_cast<std::size_t>(s)]) continue;
      for (int a = 0; a < m.n_actions; ++a) {
        const double total = m.total(s, a);
        if (total <= 0.0) continue;
        double value = 0.0;
        for (int k = 0; k < m.n_states; ++k) {
          const double c = m.count(s, a, k);
          if (c <= 0.0) continue;
          value += (c / total) * (m.reward(s, a, k) + m.gamma * v[static_cast<std::size_t>(k)]);
        }
        const auto i = static_cast<std::size_t>(s * m.n_actions + a);
        delta = std::max(delta, std::abs(value - next[i]));
        next[i] = value;
      }
    }
    q.values = std::move(next);
    ++q.sweeps;
    if (delta < tolerance) {
      q.converged = true;
      break;
    }
  }
  return q;
}

}  // namespace

QTable tabular_q_learning(const TabularMdp& buffer, int max_sweeps) { return iterate(buffer, 1e-10, max_sweeps); }

QTable value_iteration(const TabularMdp& mdp, int max_sweeps) { return iterate(mdp, 1e-12, max_sweeps); }

Counterexample build_counterexample() {
  constexpr double kGamma = 0.9;
  // Internal ids: state 1 -> 0, state 2 -> 1, state 3 -> 2.
  TabularMdp full = TabularMdp::empty(3, 2, kGamma);
  full.terminal[2] = true;
  full.add(0, 0, 1, 1.0, 2);
  full.add(0, 1, 1, 0.0, 1);
  full.add(0, 1, 2, 2.0, 3);
  full.add(1, 0, 2, 3.0, 3);
  full.add(1, 1, 2, 1.0, 2);

  TabularMdp truth = TabularMdp::empty(3, 2, kGamma);
  truth.terminal = full.terminal;
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      for (int k = 0; k < 3; ++k) {
        if (full.count(s, a, k) > 0.0) truth.add(s, a, k, full.reward(s, a, k), full.probability(s, a, k));
      }
    }
  }

  TabularMdp reduced = TabularMdp::empty(3, 2, kGamma);
  reduced.terminal = full.terminal;
  reduced.add(0, 0, 1, 1.0, 2);
  reduced.add(0, 1, 2, 2.0, 1);
  return {truth, full, reduced};
}

CounterexampleResult run_counterexample() {
  const Counterexample c = build_counterexample();
  CounterexampleResult r{value_iteration(c.true_mdp), tabular_q_learning(c.full_buffer),
                         tabular_q_learning(c.reduced_buffer), 0, 0, 0};
  r.oracle_action = r.oracle.greedy(0);
  r.full_action = r.full.greedy(0);
  r.reduced_action = r.reduced.greedy(0);
  return r;
}

void write_counterexample_report(std::ostream& out, const CounterexampleResult& r) {
  auto table = [&](const char* name, const QTable& q) {
    out << name << '\n' << "state,Q(a=0),Q(a=1),greedy\n";
    for (int s = 0; s < q.n_states; ++s) {
      out << (s + 1) << ',' << format_double(q.at(s, 0)) << ',' << format_double(q.at(s, 1)) << ',' << q.greedy(s)
          << '\n';
    }
  };
  table("value iteration on the true MDP", r.oracle);
  table("Q-learning on the full buffer", r.full);
  table("Q-learning on the reduced buffer", r.reduced);
  out << "greedy action at state 1: oracle " << r.oracle_action << ", full " << r.full_action << ", reduced "
      << r.reduced_action << '\n'
      << (r.demonstrates_suboptimality() ? "reduced buffer policy is suboptimal\n"
                                         : "reduced buffer policy is not suboptimal\n");
}

}  // namespace exid::eval
