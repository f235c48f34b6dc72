#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exid {

using Observation = std::vector<double>;

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return v >= low && v <= high; }
  double mid() const { return 0.5 * (low + high); }
  double width() const { return high - low; }
};

struct EnvSpec {
  std::string env_id;
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<Interval> obs_bounds;  // finite box B(S); clipped ranges for unbounded native dims
  int max_steps = 0;
  std::vector<std::string> action_names;
  /// Named observation features (name, index) for the rule DSL. Every index is also reachable as "x<i>".
  std::vector<std::pair<std::string, int>> feature_names;
  bool discrete_observations = false;  // MiniGrid: observations take a finite set of codes

  bool in_bounds(std::span<const double> obs) const;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;       // terminated or time limit reached
  bool truncated = false;  // done only because of the time limit
};

/// Uniform episodic stepping interface. Instances are single-owner and mutable.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Draws an initial state from d_0; fully determined by `seed`.
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Throws UsageError for out-of-range actions, a finished episode, or a missing reset.
  virtual StepResult step(int action) = 0;
  virtual int elapsed_steps() const = 0;
};

/// Supported identifiers: "mountaincar", "cartpole", "minigrid-dynobs-6x6", "minigrid-lavagap-7x7".
const std::vector<std::string>& supported_env_ids();
bool is_supported_env(std::string_view env_id);
/// Throws LookupError listing the supported ids.
std::unique_ptr<Environment> make_environment(std::string_view env_id);
const EnvSpec& env_spec(std::string_view env_id);

/// Affine map from obs_bounds onto [-1, 1] per dimension; applied before every network.
class InputScaler {
 public:
  InputScaler() = default;
  explicit InputScaler(const EnvSpec& spec);

  void apply(std::span<const double> obs, std::span<double> out) const;
  Observation apply(std::span<const double> obs) const;
  int dim() const { return static_cast<int>(center_.size()); }

 private:
  std::vector<double> center_;
  std::vector<double> inv_half_width_;
};

}  // namespace exid
