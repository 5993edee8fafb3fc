#pragma once

#include <Eigen/Core>

#include <random>
#include <string>
#include <string_view>

#include "fes/nn/autodiff.hpp"

namespace fes::nn {

enum class Activation { Sigmoid, Linear };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

template <typename Scalar>
Scalar activate(const Scalar& x, Activation act) {
  return act == Activation::Sigmoid ? Scalar(ad::sigmoid(x)) : x;
}

/// psi(W x + b), element-wise activation.
template <typename Scalar, typename WDerived, typename BDerived>
Vec<Scalar> dense_forward(const Vec<Scalar>& x, const Eigen::MatrixBase<WDerived>& weights,
                          const Eigen::MatrixBase<BDerived>& bias, Activation act,
                          std::string_view layer = "dense") {
  if (weights.cols() != x.size() || weights.rows() != bias.size())
    throw ShapeError("layer '" + std::string(layer) + "': weights " + std::to_string(weights.rows()) + "x" +
                     std::to_string(weights.cols()) + ", bias " + std::to_string(bias.size()) + ", input " +
                     std::to_string(x.size()));
  Vec<Scalar> out = weights * x + bias;
  if (act == Activation::Sigmoid)
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = ad::sigmoid(out(i));
  return out;
}

/// Uniform(-0.5, 0.5) / sqrt(fan_in) initialisation, column by column.
Eigen::MatrixXd init_dense(Eigen::Index out_dim, Eigen::Index in_dim, std::mt19937_64& rng);

}  // namespace fes::nn
