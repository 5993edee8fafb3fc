#pragma once

#include <string>
#include <vector>

#include "fes/sched/scenario.hpp"

namespace fes {

enum class ViolationKind {
  Uniqueness,        ///< not exactly one start, or start past S - (a_n - 1)
  ForbiddenSlot,     ///< start on an infinite-cost slot
  Inverter,          ///< slot load above Theta
  MaxStorage,        ///< slot load above generation + B_max
  TotalConsumption,  ///< cumulative load above B + cumulative generation
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int device = -1;  ///< set for per-device violations
  int slot = -1;    ///< 0-based, set for per-slot violations
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Every violated (constraint, device/slot) pair; empty means feasible.
std::vector<Violation> validate(const Schedule& schedule, const ScenarioWindow& scenario);
inline bool is_feasible(const Schedule& schedule, const ScenarioWindow& scenario) {
  return validate(schedule, scenario).empty();
}

/// Incremental load bookkeeping for constructive search. Placing a device
/// only ever adds load, so a failed `can_place` stays failed as more devices
/// are added.
class LoadTracker {
 public:
  explicit LoadTracker(const ScenarioWindow& scenario);

  bool can_place(std::size_t device, int start) const;
  void place(std::size_t device, int start);

  const Eigen::VectorXd& load() const noexcept { return load_; }
  /// kWh still available up to the end of each slot under the cumulative constraint.
  const Eigen::VectorXd& cum_slack() const noexcept { return cum_slack_; }

 private:
  const ScenarioWindow* scenario_;
  Eigen::VectorXd load_;       ///< kW per slot
  Eigen::VectorXd slot_cap_;   ///< min(Theta, g_s + B_max)
  Eigen::VectorXd cum_slack_;  ///< B + cumulative generation - cumulative load
};

}  // namespace fes
