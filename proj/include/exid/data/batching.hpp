#pragma once

#include <span>
#include <vector>

#include "exid/env/environment.hpp"
#include "exid/nn/mlp.hpp"

namespace exid::data {

nn::Vector scaled_vector(const InputScaler& scaler, std::span<const double> s);
/// One scaled observation per row.
nn::Matrix scaled_matrix(const InputScaler& scaler, const std::vector<Observation>& states);

}  // namespace exid::data
