#pragma once

// Recurrent trend-predictive forecaster.
//
// One data-processing (DP) unit per input series (series 0 is generation,
// 1..F are weather features). Each unit holds a trend cell
//     t_s = alpha1 * (newer - older) + alpha2 * t_{s-1}
// and a level cell
//     l_s = beta1 * newer + beta2 * l_{s-1}.
// The per-slot input of the dense stack is [t_0, l_0, newer_0, ..., t_F,
// l_F, newer_F]; the stack has hidden widths F+1 and ceil((F+1)/2) with
// sigmoid, then one output neuron. The same parameters serve every slot of
// the window and the DP state threads through the slots in order, starting
// from zero at each window.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fes/nn/autodiff.hpp"
#include "fes/nn/checkpoint.hpp"
#include "fes/nn/layers.hpp"
#include "fes/nn/param_store.hpp"

namespace fes::rtpnn {

/// Lagged inputs for one window. Row s holds slot s; column 0 is the
/// generation series, columns 1..F the features. `older` is the value two
/// periods back, `newer` one period back. Raw (unnormalised) units.
struct ForecastInput {
  Eigen::MatrixXd older;
  Eigen::MatrixXd newer;
  std::vector<std::int64_t> timestamps;  ///< epoch hours of each slot start

  Eigen::Index slots() const { return newer.rows(); }
  Eigen::Index series() const { return newer.cols(); }
};

/// A window with its realised generation (kW per slot).
struct TrainingWindow {
  ForecastInput input;
  Eigen::VectorXd target;
};

/// Per-series min-max scaling fitted on training data.
struct Normalizer {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  static Normalizer fit(std::span<const TrainingWindow> windows);

  double range(Eigen::Index f) const { return max(f) - min(f); }
  double normalize(Eigen::Index f, double x) const { return (x - min(f)) / range(f); }
  double denormalize(Eigen::Index f, double y) const { return y * range(f) + min(f); }
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& rows) const;
};

/// Recurrent state of all DP units.
struct DpState {
  Eigen::VectorXd trend;
  Eigen::VectorXd level;

  static DpState zeros(Eigen::Index series) {
    return {Eigen::VectorXd::Zero(series), Eigen::VectorXd::Zero(series)};
  }
};

template <typename Scalar>
struct DpOutput {
  Scalar trend;
  Scalar level;
  Scalar passthrough;
};

template <typename Scalar>
DpOutput<Scalar> dp_unit_step(const Scalar& older, const Scalar& newer, const Scalar& trend_prev,
                              const Scalar& level_prev, const Scalar& alpha1, const Scalar& alpha2,
                              const Scalar& beta1, const Scalar& beta2) {
  return {alpha1 * (newer - older) + alpha2 * trend_prev, beta1 * newer + beta2 * level_prev, newer};
}

/// Convenience overload on plain doubles; rejects non-finite inputs.
DpOutput<double> dp_unit_step(double older, double newer, double trend_prev, double level_prev, double alpha1,
                              double alpha2, double beta1, double beta2);

/// All learnable tensors of the forecaster, in a given scalar type.
template <typename Scalar>
struct Weights {
  Vec<Scalar> alpha1, alpha2, beta1, beta2;
  Mat<Scalar> w1, w2, w_out;
  Vec<Scalar> b1, b2, b_out;
};

/// Normalised forecast for every slot of the window. `older` and `newer`
/// must already be normalised.
template <typename Scalar>
Vec<Scalar> forward_window(const Weights<Scalar>& w, const Eigen::MatrixXd& older, const Eigen::MatrixXd& newer,
                           nn::Activation output) {
  const Eigen::Index S = newer.rows(), series = newer.cols();
  Vec<Scalar> trend = Vec<Scalar>::Constant(series, Scalar(0.0));
  Vec<Scalar> level = Vec<Scalar>::Constant(series, Scalar(0.0));
  Vec<Scalar> out(S);
  Vec<Scalar> z(3 * series);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index f = 0; f < series; ++f) {
      const auto dp = dp_unit_step<Scalar>(Scalar(older(s, f)), Scalar(newer(s, f)), trend(f), level(f), w.alpha1(f),
                                           w.alpha2(f), w.beta1(f), w.beta2(f));
      trend(f) = dp.trend;
      level(f) = dp.level;
      z(3 * f) = dp.trend;
      z(3 * f + 1) = dp.level;
      z(3 * f + 2) = dp.passthrough;
    }
    const Vec<Scalar> h1 = nn::dense_forward(z, w.w1, w.b1, nn::Activation::Sigmoid, "hidden1");
    const Vec<Scalar> h2 = nn::dense_forward(h1, w.w2, w.b2, nn::Activation::Sigmoid, "hidden2");
    out(s) = nn::dense_forward(h2, w.w_out, w.b_out, output, "output")(0);
  }
  return out;
}

struct RtpnnConfig {
  double l2 = 1e-4;  ///< coefficient on the squared DP scalars
  nn::Activation output = nn::Activation::Sigmoid;
  std::uint64_t seed = 1;
};

class RtpnnModel {
 public:
  /// Fresh model for `features` weather series (F); S is set by the data.
  RtpnnModel(int features, const RtpnnConfig& config);

  int features() const noexcept { return features_; }
  Eigen::Index series() const noexcept { return features_ + 1; }
  Eigen::Index hidden1() const noexcept { return features_ + 1; }
  Eigen::Index hidden2() const noexcept { return (features_ + 2) / 2; }
  const RtpnnConfig& config() const noexcept { return config_; }

  const nn::ParamStore& params() const noexcept { return params_; }
  nn::ParamStore& params() noexcept { return params_; }
  const Normalizer& normalizer() const noexcept { return norm_; }
  void set_normalizer(Normalizer norm);

  Weights<double> weights() const;
  Weights<ad::Var> bind(const nn::ParamBinding& binding) const;

  /// Denormalised forecast per slot, clamped at 0 kW.
  Eigen::VectorXd forecast_window(const ForecastInput& input) const;
  /// Forecast in normalised units, no clamping.
  Eigen::VectorXd forecast_normalized(const ForecastInput& input) const;

  /// Window loss: MSE in normalised units plus the L2 penalty on DP scalars.
  double window_loss(const TrainingWindow& window) const;
  /// Analytic gradient of `window_loss` through the full recurrence.
  nn::GradMap window_gradients(const TrainingWindow& window) const;

  nn::Checkpoint to_checkpoint() const;
  static RtpnnModel from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  void check_input(const ForecastInput& input) const;

  int features_;
  RtpnnConfig config_;
  nn::ParamStore params_;
  Normalizer norm_;
};

struct Stage1Config {
  int epochs = 40;
  double lr = 1e-3;
  int batch_size = 24;  ///< in slots; rounded to whole windows, at least one
  std::uint64_t seed = 1;
  bool shuffle = true;
  nn::AdamConfig adam;
};

struct Stage1Result {
  std::vector<double> loss_history;  ///< mean normalised MSE per epoch
};

/// Fits the normaliser on `train` (training data only), then minimises the
/// per-window MSE plus L2 penalty with Adam. Throws TrainingError on a
/// non-finite loss, naming the epoch and batch.
Stage1Result stage1_train(RtpnnModel& model, std::span<const TrainingWindow> train, const Stage1Config& config);

/// CSV rows `timestamp,gen_forecast_kw`.
std::string forecast_csv(const ForecastInput& input, const Eigen::VectorXd& forecast);

}  // namespace fes::rtpnn
