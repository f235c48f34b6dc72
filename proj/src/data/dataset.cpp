#include "exid/data/dataset.hpp"

#include <cmath>

#include "exid/common/error.hpp"

namespace exid::data {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::expert:
      return "expert";
    case DatasetKind::replay:
      return "replay";
    case DatasetKind::noisy:
      return "noisy";
  }
  return "unknown";
}

DatasetKind parse_kind(std::string_view name) {
  if (name == "expert") return DatasetKind::expert;
  if (name == "replay") return DatasetKind::replay;
  if (name == "noisy") return DatasetKind::noisy;
  throw UsageError("unknown dataset kind '" + std::string(name) + "' (expected expert, replay or noisy)");
}

void Dataset::validate() const {
  if (transitions.empty()) throw EmptyDatasetError("dataset for " + env_id + " is empty");
  const EnvSpec& spec = env_spec(env_id);
  if (obs_dim != spec.obs_dim || n_actions != spec.n_actions) {
    throw ShapeError("dataset dimensions do not match environment " + env_id);
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& t = transitions[i];
    if (static_cast<int>(t.s.size()) != obs_dim || static_cast<int>(t.s_next.size()) != obs_dim) {
      throw ShapeError("transition " + std::to_string(i) + " has the wrong observation size");
    }
    if (t.a < 0 || t.a >= n_actions) throw ShapeError("transition " + std::to_string(i) + " has an invalid action");
    if (!std::isfinite(t.r)) throw ShapeError("transition " + std::to_string(i) + " has a non-finite reward");
  }
}

void require_env(const Dataset& dataset, std::string_view env_id) {
  if (dataset.env_id != env_id) {
    throw EnvMismatchError("dataset was generated for '" + dataset.env_id + "' but '" + std::string(env_id) +
                           "' was expected");
  }
}

}  // namespace exid::data
