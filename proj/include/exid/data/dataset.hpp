#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exid/env/environment.hpp"

namespace exid::data {

struct Transition {
  Observation s;
  int a = 0;
  double r = 0.0;
  Observation s_next;
  bool done = false;  // true environment termination (time-limit truncation is not terminal)

  bool operator==(const Transition&) const = default;
};

enum class DatasetKind { expert, replay, noisy };

std::string to_string(DatasetKind kind);
/// Throws UsageError for unknown names.
DatasetKind parse_kind(std::string_view name);

struct DatasetMetadata {
  std::uint64_t seed = 0;
  std::optional<double> source_score;  // mean episode return of the generating policy
  std::optional<double> epsilon;       // noisy datasets only

  bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
  std::string env_id;
  DatasetKind kind = DatasetKind::expert;
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<Transition> transitions;
  DatasetMetadata meta;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }

  /// Checks non-emptiness, dimensions, action range and finiteness against the named environment.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Throws EnvMismatchError unless the dataset belongs to `env_id`.
void require_env(const Dataset& dataset, std::string_view env_id);

/// Line format: a header line
///   exid-dataset 1 env_id=<id> kind=<kind> obs_dim=<d> n_actions=<n> count=<c> seed=<s> [epsilon=<e>] [source_score=<v>]
/// followed by one line per transition: s[0..d) a r s_next[0..d) done, space separated.
/// Doubles use the shortest text that parses back to the identical value.
void write_dataset(std::ostream& out, const Dataset& dataset);
/// Throws ParseError with the offending line number.
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
/// As load_dataset, then require_env.
Dataset load_dataset(const std::filesystem::path& path, std::string_view expected_env);

}  // namespace exid::data
