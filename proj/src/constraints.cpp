#include "fes/sched/constraints.hpp"

#include <cmath>

namespace fes {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Uniqueness: return "uniqueness";
    case ViolationKind::ForbiddenSlot: return "forbidden_slot";
    case ViolationKind::Inverter: return "inverter";
    case ViolationKind::MaxStorage: return "max_storage";
    case ViolationKind::TotalConsumption: return "total_consumption";
  }
  return "unknown";
}

std::vector<Violation> validate(const Schedule& schedule, const ScenarioWindow& scenario) {
  std::vector<Violation> out;
  const int S = scenario.slots;
  const auto N = static_cast<Eigen::Index>(scenario.device_count());
  if (schedule.devices() != N || schedule.slots() != S) {
    out.push_back({ViolationKind::Uniqueness, -1, -1, static_cast<double>(schedule.devices()), static_cast<double>(N)});
    return out;
  }

  for (Eigen::Index n = 0; n < N; ++n) {
    const auto nn = static_cast<std::size_t>(n);
    // only starts in [0, S - a_n] count towards the single-start requirement
    int in_range = 0, total = 0;
    for (int s = 0; s < S; ++s) {
      const int x = schedule.matrix()(n, s);
      total += x;
      if (s <= scenario.last_start(nn)) in_range += x;
      if (x != 0 && !std::isfinite(scenario.devices[nn].cost(s)))
        out.push_back({ViolationKind::ForbiddenSlot, static_cast<int>(n), s, 0.0, 0.0});
    }
    if (in_range != 1 || total != 1)
      out.push_back({ViolationKind::Uniqueness, static_cast<int>(n), -1, static_cast<double>(in_range), 1.0});
  }

  const Eigen::VectorXd load = consumption(schedule, scenario);
  const double dt = scenario.slot_hours();
  double cum_load = 0.0, cum_gen = 0.0;
  for (int s = 0; s < S; ++s) {
    if (load(s) > scenario.inverter_kw + kFeasibilityTol)
      out.push_back({ViolationKind::Inverter, -1, s, load(s), scenario.inverter_kw});
    const double storage_cap = scenario.generation(s) + scenario.battery_max_kwh;
    if (load(s) > storage_cap + kFeasibilityTol)
      out.push_back({ViolationKind::MaxStorage, -1, s, load(s), storage_cap});
    cum_load += load(s) * dt;
    cum_gen += scenario.generation(s) * dt;
    if (cum_load > scenario.battery_kwh + cum_gen + kFeasibilityTol)
      out.push_back({ViolationKind::TotalConsumption, -1, s, cum_load, scenario.battery_kwh + cum_gen});
  }
  return out;
}

LoadTracker::LoadTracker(const ScenarioWindow& scenario)
    : scenario_(&scenario),
      load_(Eigen::VectorXd::Zero(scenario.slots)),
      slot_cap_(scenario.slots),
      cum_slack_(scenario.slots) {
  const double dt = scenario.slot_hours();
  double cum_gen = 0.0;
  for (int s = 0; s < scenario.slots; ++s) {
    slot_cap_(s) = std::min(scenario.inverter_kw, scenario.generation(s) + scenario.battery_max_kwh);
    cum_gen += scenario.generation(s) * dt;
    cum_slack_(s) = scenario.battery_kwh + cum_gen;
  }
}

bool LoadTracker::can_place(std::size_t device, int start) const {
  const auto& d = scenario_->devices[device];
  const int S = scenario_->slots;
  if (start < 0 || start > scenario_->last_start(device)) return false;
  if (!std::isfinite(d.cost(start))) return false;
  for (int s = start; s < start + d.duration; ++s)
    if (load_(s) + d.power_kw > slot_cap_(s) + kFeasibilityTol) return false;
  const double e = d.power_kw * scenario_->slot_hours();
  for (int s = start; s < S; ++s) {
    const int active = std::min(d.duration, s - start + 1);
    if (cum_slack_(s) - e * active < -kFeasibilityTol) return false;
  }
  return true;
}

void LoadTracker::place(std::size_t device, int start) {
  const auto& d = scenario_->devices[device];
  const int S = scenario_->slots;
  for (int s = start; s < start + d.duration; ++s) load_(s) += d.power_kw;
  const double e = d.power_kw * scenario_->slot_hours();
  for (int s = start; s < S; ++s) cum_slack_(s) -= e * std::min(d.duration, s - start + 1);
}

}  // namespace fes
