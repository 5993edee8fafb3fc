#pragma once

// Scheduling layer: one softmax head per device over the S slots of a
// window. The logit of device n at slot s is
//   w_g * g_s + w_B * B / S - w_c * c(n,s) - w_E * E_n - w_T * Theta - w_Bmax * B_max
// with six weights per (n, s), each kept strictly positive as softplus of a
// free parameter.

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <vector>

#include "fes/nn/autodiff.hpp"
#include "fes/nn/checkpoint.hpp"
#include "fes/nn/param_store.hpp"
#include "fes/rtpnn/rtpnn.hpp"
#include "fes/sched/scenario.hpp"

namespace fes::scheduling {

enum class HeadInput { Generation, Battery, Cost, Power, Inverter, BatteryMax };
inline constexpr std::array<HeadInput, 6> kHeadInputs = {HeadInput::Generation, HeadInput::Battery,
                                                        HeadInput::Cost,       HeadInput::Power,
                                                        HeadInput::Inverter,   HeadInput::BatteryMax};
std::string head_param_name(HeadInput k);

/// Row-stochastic N x S matrix of start probabilities.
struct SoftSchedule {
  Eigen::MatrixXd x;
};

class FesModel {
 public:
  /// `forecaster` is copied in and never modified afterwards.
  FesModel(rtpnn::RtpnnModel forecaster, std::vector<std::string> device_names, int slots);

  const rtpnn::RtpnnModel& forecaster() const noexcept { return forecaster_; }
  const std::vector<std::string>& device_names() const noexcept { return device_names_; }
  Eigen::Index devices() const noexcept { return static_cast<Eigen::Index>(device_names_.size()); }
  int slots() const noexcept { return slots_; }

  /// Free (pre-softplus) head parameters; the only trainable state.
  const nn::ParamStore& head_params() const noexcept { return heads_; }
  nn::ParamStore& head_params() noexcept { return heads_; }

  /// softplus(free) for one input, N x S.
  Eigen::MatrixXd effective_weights(HeadInput k) const;

  nn::Checkpoint to_checkpoint() const;
  static FesModel from_checkpoint(const nn::Checkpoint& heads, const rtpnn::RtpnnModel& forecaster);

 private:
  rtpnn::RtpnnModel forecaster_;
  std::vector<std::string> device_names_;
  int slots_;
  nn::ParamStore heads_;
};

/// Logits of device n. Infinite costs are capped to the neural input cap.
template <typename Scalar>
Vec<Scalar> slot_scores(const std::array<const Mat<Scalar>*, 6>& free_params, const Eigen::VectorXd& forecast,
                        const ScenarioWindow& scenario, Eigen::Index n);

Eigen::VectorXd slot_scores(const FesModel& model, const Eigen::VectorXd& forecast, const ScenarioWindow& scenario,
                            Eigen::Index n);

/// Softmax of every device row (max-subtracted).
SoftSchedule soft_schedule(const FesModel& model, const Eigen::VectorXd& forecast, const ScenarioWindow& scenario);

/// Greedy repair decoder. Devices go in descending E_n * a_n; each takes its
/// most probable admissible start that keeps the schedule feasible under the
/// scenario's generation, falling back through lower-probability starts.
/// Throws InfeasibleError naming the first device with no feasible start.
Schedule decode(const SoftSchedule& soft, const ScenarioWindow& scenario);

/// Forecast + soft schedule + decoded schedule for one window.
struct Inference {
  Eigen::VectorXd forecast;
  SoftSchedule soft;
  Schedule schedule;
};

/// Runs the frozen forecaster, substitutes its output for the scenario's
/// generation, then schedules. `scenario.generation` is ignored.
Inference infer(const FesModel& model, const rtpnn::ForecastInput& input, ScenarioWindow scenario);

/// Stage-2 sample: the scenario carries the forecast generation, `label` is
/// the optimal schedule for that scenario.
struct Stage2Window {
  ScenarioWindow scenario;
  Schedule label;
};

struct Stage2Config {
  int epochs = 20;
  double lr = 1e-3;
  int batch_size = 1;  ///< windows per update
  std::uint64_t seed = 1;
  bool shuffle = true;
  nn::AdamConfig adam;
};

struct Stage2Result {
  std::vector<double> loss_history;  ///< mean CCE per window, per epoch
};

/// -sum_n sum_s label(n,s) * log x(n,s), via log-sum-exp.
double schedule_cce(const FesModel& model, const Stage2Window& window);

/// Trains the head parameters only; the forecaster is untouched.
/// Throws DataError when a label row is not one-hot.
Stage2Result stage2_train(FesModel& model, std::span<const Stage2Window> windows, const Stage2Config& config);

/// CSV `device_id,device_name,start_slot,start_time,duration_slots,power_kw`
/// (1-based slots).
std::string schedule_csv(const Schedule& schedule, const ScenarioWindow& scenario);
/// CSV with one row per device and one probability column per slot.
std::string soft_schedule_csv(const SoftSchedule& soft, const ScenarioWindow& scenario);

}  // namespace fes::scheduling
