#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fes {

/// Absolute slack (kW or kWh) allowed on every capacity comparison.
inline constexpr double kFeasibilityTol = 1e-9;

/// One schedulable appliance. Slot-valued fields are 1-based, as in the
/// cost formula; `cost` is filled by scenario assembly and may hold +inf for
/// forbidden start slots.
struct DeviceSpec {
  std::string name;
  double power_kw = 0.0;  ///< E_n, drawn in every active slot
  int duration = 1;       ///< a_n, consecutive active slots
  double desired_start = 1.0;
  double sigma = 1.0;
  int earliest = 1;
  int latest = 0;  ///< 0 means "last slot"
  Eigen::VectorXd cost;
};

/// One scheduling window: generation per slot, battery and inverter limits,
/// and the devices to place.
struct ScenarioWindow {
  int slots = 24;
  double horizon_hours = 24.0;
  std::int64_t start_hour = 0;  ///< epoch hours at the start of slot 1
  Eigen::VectorXd generation;   ///< kW per slot (actual or forecast)
  double battery_kwh = 0.0;     ///< B, energy stored at window start
  double battery_max_kwh = 0.0; ///< B_max
  double inverter_kw = 0.0;     ///< Theta
  std::vector<DeviceSpec> devices;

  std::size_t device_count() const noexcept { return devices.size(); }
  double slot_hours() const { return horizon_hours / slots; }
  /// Last admissible 0-based start index for device n (S - a_n).
  int last_start(std::size_t n) const { return slots - devices[n].duration; }

  /// Throws ParameterError/ShapeError if any scenario invariant is broken.
  void check() const;
};

/// Binary N x S start matrix.
class Schedule {
 public:
  Schedule() = default;
  Schedule(Eigen::Index devices, Eigen::Index slots) : x_(Eigen::MatrixXi::Zero(devices, slots)) {}
  explicit Schedule(Eigen::MatrixXi x) : x_(std::move(x)) {}

  /// `starts` are 0-based slot indices; negative entries leave the row empty.
  static Schedule from_starts(std::span<const int> starts, int slots);

  const Eigen::MatrixXi& matrix() const noexcept { return x_; }
  Eigen::MatrixXi& matrix() noexcept { return x_; }
  Eigen::Index devices() const noexcept { return x_.rows(); }
  Eigen::Index slots() const noexcept { return x_.cols(); }

  /// First started slot of row n, if any.
  std::optional<int> start(Eigen::Index n) const;
  /// 0-based start per device, -1 for empty rows.
  std::vector<int> starts() const;

  friend bool operator==(const Schedule& a, const Schedule& b) { return a.x_ == b.x_; }

 private:
  Eigen::MatrixXi x_;
};

/// activity(n, s) = 1 iff device n runs in slot s.
Eigen::MatrixXi activity(const Schedule& schedule, const ScenarioWindow& scenario);
/// Per-slot consumption sum_n E_n * activity(n, s), kW.
Eigen::VectorXd consumption(const Schedule& schedule, const ScenarioWindow& scenario);
/// sum_n sum_s x(n,s) c(n,s), accumulated in device order.
double objective(const Schedule& schedule, const ScenarioWindow& scenario);
/// Starts with finite cost inside [0, S - a_n], ascending.
std::vector<int> allowed_starts(const ScenarioWindow& scenario, std::size_t device);

}  // namespace fes
