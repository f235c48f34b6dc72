#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exid/data/dataset.hpp"
#include "exid/knowledge/tree.hpp"

namespace exid::data {

enum class TakeMode { first, random };

struct ReductionSpec {
  double fraction = 1.0;
  std::optional<knowledge::Predicate> removal;  // transitions whose s satisfies this are dropped
  TakeMode take = TakeMode::first;
  std::uint64_t seed = 0;  // random take only

  void validate() const;
};

/// Keeps round(fraction * |full|) transitions (first-k or a random subset in original order),
/// then drops those whose s satisfies the removal predicate. Throws EmptyDatasetError on an empty result.
Dataset reduce(const Dataset& full, const ReductionSpec& spec);

/// State identity for the reduced-buffer checks: 64 uniform bins per dimension over the
/// observation bounds (values outside are clamped to the edge bins); exact values for grid worlds.
class StateDiscretizer {
 public:
  explicit StateDiscretizer(const EnvSpec& spec, int bins = 64);
  std::string key(std::span<const double> s) const;

 private:
  std::vector<Interval> bounds_;
  int bins_;
  bool exact_;
};

struct ReductionReport {
  bool proper_subset = false;  // (a) reduced is a strict sub-multiset of full
  bool states_absent = false;  // (b) some state of full does not occur in reduced
  bool counts_reduced = false;  // (c) some (s, a, s') occurs fewer times in reduced
  std::size_t full_states = 0;
  std::size_t reduced_states = 0;
  std::size_t absent_states = 0;
  std::size_t reduced_transition_keys = 0;

  bool ok() const { return proper_subset && states_absent && counts_reduced; }
  std::vector<std::string> violations() const;
  std::string summary() const;
};

/// Throws EnvMismatchError when the datasets belong to different environments.
ReductionReport verify_reduced(const Dataset& full, const Dataset& reduced, int bins = 64);
/// verify_reduced, then VerificationError listing every violated condition.
ReductionReport require_reduced(const Dataset& full, const Dataset& reduced, int bins = 64);

}  // namespace exid::data
