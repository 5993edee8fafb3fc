#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "fes/sched/scenario.hpp"

namespace fes::data {

/// Cost value standing in for +inf at the scheduling-layer input.
inline constexpr double kNeuralInfinityCap = 100.0;

/// Inverted-Gaussian dissatisfaction cost for starting at slot s = 1..S:
///   c(s) = 1 - exp(-((s - mu) / sigma)^2 / 2) / (sigma * sqrt(2 pi)),
/// +inf outside [earliest, latest]. Throws ParameterError for sigma <= 0.
Eigen::VectorXd cost_profile(const DeviceSpec& device, int slots);

/// Cost row used inside a scenario: like `cost_profile`, but the start
/// bounds are first clipped into the operable range [1, S - a + 1] so a
/// device whose window starts too late still gets its latest possible start.
Eigen::VectorXd scenario_cost_row(const DeviceSpec& device, int slots);

/// Replaces +inf entries by `cap` for the neural input.
Eigen::VectorXd cap_infinite(const Eigen::VectorXd& row, double cap = kNeuralInfinityCap);

/// Household appliance table; water heater and central AC appear twice
/// (two daily runs), giving 14 schedulable devices.
std::vector<DeviceSpec> default_devices();

struct ScenarioParams {
  int slots = 24;
  double horizon_hours = 24.0;
  double battery_max_kwh = 3 * 13.5;
  double inverter_kw = 10.0;
  /// Initial stored energy as a fraction of B_max.
  double battery_fraction = 1.0;
};

/// Builds a window from devices (cost rows computed here) and a generation
/// vector of length `params.slots`.
ScenarioWindow make_scenario(const std::vector<DeviceSpec>& devices, const Eigen::VectorXd& generation,
                             const ScenarioParams& params = {}, std::int64_t start_hour = 0);

/// The default appliance set with the default battery/inverter parameters.
ScenarioWindow default_scenario(const Eigen::VectorXd& generation, const ScenarioParams& params = {});

/// Device file: JSON array of {name, power_kw, duration_slots, desired_start,
/// sigma, earliest, latest}.
std::vector<DeviceSpec> load_devices(const std::filesystem::path& path);
std::vector<DeviceSpec> parse_devices(const std::string& json_text);
std::string devices_to_json(const std::vector<DeviceSpec>& devices);

}  // namespace fes::data
