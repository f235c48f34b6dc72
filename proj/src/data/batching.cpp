#include "exid/data/batching.hpp"

#include "exid/common/error.hpp"

namespace exid::data {

nn::Vector scaled_vector(const InputScaler& scaler, std::span<const double> s) {
  nn::Vector v(scaler.dim());
  scaler.apply(s, std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return v;
}

nn::Matrix scaled_matrix(const InputScaler& scaler, const std::vector<Observation>& states) {
  const int dim = scaler.dim();
  nn::Matrix m(static_cast<Eigen::Index>(states.size()), dim);
  std::vector<double> row(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < states.size(); ++i) {
    scaler.apply(states[i], row);
    for (int j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace exid::data
