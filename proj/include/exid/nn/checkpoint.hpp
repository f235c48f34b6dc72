#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "exid/nn/mlp.hpp"

namespace exid::nn {

/// Plain-text parameter record, version 1:
///
///     exid-mlp 1
///     meta <key> <value>          (zero or more, e.g. "meta env_id cartpole")
///     dropout <rate>
///     layers <count+1> <size0> <size1> ...
///     w <row values...>           (one line per weight row, row-major, layer by layer)
///     b <values...>               (one line per layer, after that layer's rows)
///     end
///
/// Numbers use the shortest decimal form that parses back to the same double.
struct Checkpoint {
  MlpParams params;
  std::map<std::string, std::string> meta;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace exid::nn
