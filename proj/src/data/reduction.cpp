#include "exid/data/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"

namespace exid::data {

void ReductionSpec::validate() const {
  if (!(fraction > 0.0) || fraction > 1.0) throw UsageError("reduction fraction must lie in (0, 1]");
}

Dataset reduce(const Dataset& full, const ReductionSpec& spec) {
  spec.validate();
  const std::size_t n = full.size();
  const auto k = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::max<long long>(1, std::llround(spec.fraction * static_cast<double>(n)))));

  std::vector<std::size_t> keep(k);
  if (spec.take == TakeMode::first) {
    std::iota(keep.begin(), keep.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng rng = make_rng(spec.seed, "reduce.take");
    // Partial Fisher-Yates, then restore dataset order.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    keep.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(keep.begin(), keep.end());
  }

  Dataset out;
  out.env_id = full.env_id;
  out.kind = full.kind;
  out.obs_dim = full.obs_dim;
  out.n_actions = full.n_actions;
  out.meta = full.meta;
  for (std::size_t i : keep) {
    const Transition& t = full.transitions[i];
    if (spec.removal && spec.removal->holds(t.s)) continue;
    out.transitions.push_back(t);
  }
  if (out.empty()) throw EmptyDatasetError("reduction removed every transition");
  return out;
}

StateDiscretizer::StateDiscretizer(const EnvSpec& spec, int bins)
    : bounds_(spec.obs_bounds), bins_(bins), exact_(spec.discrete_observations) {
  if (bins <= 0) throw UsageError("bin count must be positive");
}

std::string StateDiscretizer::key(std::span<const double> s) const {
  std::string k;
  if (exact_) {
    k.resize(s.size() * sizeof(double));
    std::memcpy(k.data(), s.data(), k.size());
    return k;
  }
  k.resize(s.size() * sizeof(int));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Interval& b = bounds_[i];
    const double u = (s[i] - b.low) / (b.high - b.low);
    const int bin = std::clamp(static_cast<int>(std::floor(u * bins_)), 0, bins_ - 1);
    std::memcpy(k.data() + i * sizeof(int), &bin, sizeof(int));
  }
  return k;
}

namespace {

std::string exact_key(const Transition& t) {
  std::string k;
  k.resize((t.s.size() + t.s_next.size() + 2) * sizeof(double) + 1);
  char* p = k.data();
  std::memcpy(p, t.s.data(), t.s.size() * sizeof(double));
  p += t.s.size() * sizeof(double);
  const double a = t.a;
  std::memcpy(p, &a, sizeof(double));
  p += sizeof(double);
  std::memcpy(p, &t.r, sizeof(double));
  p += sizeof(double);
  std::memcpy(p, t.s_next.data(), t.s_next.size() * sizeof(double));
  p += t.s_next.size() * sizeof(double);
  *p = t.done ? 1 : 0;
  return k;
}

}  // namespace

std::vector<std::string> ReductionReport::violations() const {
  std::vector<std::string> v;
  if (!proper_subset) v.emplace_back("(a) reduced buffer is not a proper subset of the full buffer");
  if (!states_absent) v.emplace_back("(b) every state of the full buffer is still present");
  if (!counts_reduced) v.emplace_back("(c) no transition has a smaller count in the reduced buffer");
  return v;
}

std::string ReductionReport::summary() const {
  std::ostringstream out;
  out << "proper_subset=" << proper_subset << " states_absent=" << states_absent
      << " counts_reduced=" << counts_reduced << " full_states=" << full_states
      << " reduced_states=" << reduced_states << " absent_states=" << absent_states
      << " reduced_transition_keys=" << reduced_transition_keys;
  return out.str();
}

ReductionReport verify_reduced(const Dataset& full, const Dataset& reduced, int bins) {
  require_env(reduced, full.env_id);
  const StateDiscretizer disc(env_spec(full.env_id), bins);
  ReductionReport report;

  std::unordered_map<std::string, long> exact;
  for (const auto& t : full.transitions) ++exact[exact_key(t)];
  bool subset = true;
  for (const auto& t : reduced.transitions) {
    auto it = exact.find(exact_key(t));
    if (it == exact.end() || it->second == 0) {
      subset = false;
      break;
    }
    --it->second;
  }
  report.proper_subset = subset && reduced.size() < full.size();

  std::unordered_set<std::string> full_states, reduced_states;
  for (const auto& t : full.transitions) {
    full_states.insert(disc.key(t.s));
    full_states.insert(disc.key(t.s_next));
  }
  for (const auto& t : reduced.transitions) {
    reduced_states.insert(disc.key(t.s));
    reduced_states.insert(disc.key(t.s_next));
  }
  report.full_states = full_states.size();
  report.reduced_states = reduced_states.size();
  for (const auto& k : full_states) report.absent_states += reduced_states.count(k) == 0 ? 1 : 0;
  report.states_absent = report.absent_states > 0;

  auto sas_key = [&](const Transition& t) { return disc.key(t.s) + char(t.a) + disc.key(t.s_next); };
  std::unordered_map<std::string, long> counts;
  for (const auto& t : full.transitions) ++counts[sas_key(t)];
  for (const auto& t : reduced.transitions) --counts[sas_key(t)];
  for (const auto& [key, diff] : counts) {
    if (diff > 0) ++report.reduced_transition_keys;
  }
  report.counts_reduced = report.reduced_transition_keys > 0;
  return report;
}

ReductionReport require_reduced(const Dataset& full, const Dataset& reduced, int bins) {
  ReductionReport report = verify_reduced(full, reduced, bins);
  if (!report.ok()) {
    std::string msg = "reduced buffer check failed:";
    for (const auto& v : report.violations()) msg += "\n  " + v;
    throw VerificationError(msg);
  }
  return report;
}

}  // namespace exid::data
