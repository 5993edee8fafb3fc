#include "fes/nn/layers.hpp"

#include <cmath>

#include "fes/errors.hpp"

namespace fes::nn {

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "linear") return Activation::Linear;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected sigmoid|linear)");
}

std::string_view to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "linear"; }

Eigen::MatrixXd init_dense(Eigen::Index out_dim, Eigen::Index in_dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  Eigen::MatrixXd w(out_dim, in_dim);
  for (Eigen::Index j = 0; j < in_dim; ++j)
    for (Eigen::Index i = 0; i < out_dim; ++i) w(i, j) = u(rng) * scale;
  return w;
}

}  // namespace fes::nn
