#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace exid {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named sub-stream ("data", "init", "dropout", "eval", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Derives an independent seed for the index-th member of a family (episode, worker, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

/// Uniform integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double low, double high) {
  return std::uniform_real_distribution<double>(low, high)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace exid
