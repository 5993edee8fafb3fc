#pragma once

#include <Eigen/Core>

#include <span>

#include "fes/nn/layers.hpp"
#include "fes/nn/param_store.hpp"
#include "fes/rtpnn/rtpnn.hpp"

namespace fes::eval {

/// Yesterday's generation at the same slot.
Eigen::VectorXd naive_forecast(const rtpnn::ForecastInput& input);

/// Least squares on [1, older, newer] per slot (all series), solved by
/// column-pivoting QR.
class LinearBaseline {
 public:
  static LinearBaseline fit(std::span<const rtpnn::TrainingWindow> train);
  Eigen::VectorXd forecast(const rtpnn::ForecastInput& input) const;
  const Eigen::VectorXd& coefficients() const noexcept { return coef_; }

 private:
  Eigen::VectorXd coef_;
};

struct MlpConfig {
  int hidden = 8;
  int epochs = 40;
  double lr = 1e-2;
  int batch_size = 24;  ///< windows per update
  std::uint64_t seed = 1;
};

/// Per-slot MLP on the min-max normalised [older, newer] vector: one sigmoid
/// hidden layer and a linear output.
class MlpBaseline {
 public:
  static MlpBaseline fit(std::span<const rtpnn::TrainingWindow> train, const MlpConfig& config);
  Eigen::VectorXd forecast(const rtpnn::ForecastInput& input) const;

 private:
  rtpnn::Normalizer norm_;
  nn::ParamStore params_;
};

}  // namespace fes::eval
