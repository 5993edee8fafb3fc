#include "fes/sched/scenario.hpp"

#include <cmath>

#include "fes/errors.hpp"

namespace fes {

void ScenarioWindow::check() const {
  if (slots < 1) throw ParameterError("scenario: S must be >= 1");
  if (!(horizon_hours > 0.0)) throw ParameterError("scenario: H must be > 0");
  if (generation.size() != slots)
    throw ShapeError("scenario: generation has " + std::to_string(generation.size()) + " entries, S = " +
                     std::to_string(slots));
  if (!(battery_max_kwh >= 0.0) || !(battery_kwh >= 0.0) || battery_kwh > battery_max_kwh)
    throw ParameterError("scenario: B must lie in [0, B_max]");
  if (!(inverter_kw >= 0.0)) throw ParameterError("scenario: inverter limit must be >= 0");
  for (Eigen::Index s = 0; s < generation.size(); ++s)
    if (!(generation(s) >= 0.0) || !std::isfinite(generation(s)))
      throw ParameterError("scenario: generation must be finite and >= 0 (slot " + std::to_string(s + 1) + ")");
  for (const auto& d : devices) {
    if (d.duration < 1 || d.duration > slots)
      throw ParameterError("device '" + d.name + "': duration must lie in [1, S]");
    if (!(d.power_kw > 0.0)) throw ParameterError("device '" + d.name + "': power must be > 0");
    if (d.cost.size() != slots)
      throw ShapeError("device '" + d.name + "': cost row has " + std::to_string(d.cost.size()) +
                       " entries, S = " + std::to_string(slots));
  }
}

Schedule Schedule::from_starts(std::span<const int> starts, int slots) {
  Schedule out(static_cast<Eigen::Index>(starts.size()), slots);
  for (std::size_t n = 0; n < starts.size(); ++n) {
    if (starts[n] < 0) continue;
    if (starts[n] >= slots) throw ShapeError("start slot " + std::to_string(starts[n]) + " outside window");
    out.x_(static_cast<Eigen::Index>(n), starts[n]) = 1;
  }
  return out;
}

std::optional<int> Schedule::start(Eigen::Index n) const {
  for (Eigen::Index s = 0; s < x_.cols(); ++s)
    if (x_(n, s) != 0) return static_cast<int>(s);
  return std::nullopt;
}

std::vector<int> Schedule::starts() const {
  std::vector<int> out(static_cast<std::size_t>(x_.rows()), -1);
  for (Eigen::Index n = 0; n < x_.rows(); ++n)
    if (auto s = start(n)) out[static_cast<std::size_t>(n)] = *s;
  return out;
}

Eigen::MatrixXi activity(const Schedule& schedule, const ScenarioWindow& scenario) {
  const Eigen::Index N = schedule.devices(), S = schedule.slots();
  Eigen::MatrixXi act = Eigen::MatrixXi::Zero(N, S);
  for (Eigen::Index n = 0; n < N; ++n) {
    const int a = scenario.devices[static_cast<std::size_t>(n)].duration;
    for (Eigen::Index s = 0; s < S; ++s) {
      // convolution over s' in [max(1, s - (a - 1)), s]
      for (Eigen::Index sp = std::max<Eigen::Index>(0, s - (a - 1)); sp <= s; ++sp) act(n, s) += schedule.matrix()(n, sp);
    }
  }
  return act;
}

Eigen::VectorXd consumption(const Schedule& schedule, const ScenarioWindow& scenario) {
  const Eigen::MatrixXi act = activity(schedule, scenario);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(act.cols());
  for (Eigen::Index s = 0; s < act.cols(); ++s)
    for (Eigen::Index n = 0; n < act.rows(); ++n)
      out(s) += scenario.devices[static_cast<std::size_t>(n)].power_kw * act(n, s);
  return out;
}

double objective(const Schedule& schedule, const ScenarioWindow& scenario) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < schedule.devices(); ++n)
    for (Eigen::Index s = 0; s < schedule.slots(); ++s)
      if (schedule.matrix()(n, s) != 0)
        total += schedule.matrix()(n, s) * scenario.devices[static_cast<std::size_t>(n)].cost(s);
  return total;
}

std::vector<int> allowed_starts(const ScenarioWindow& scenario, std::size_t device) {
  std::vector<int> out;
  const auto& d = scenario.devices[device];
  for (int s = 0; s <= scenario.last_start(device); ++s)
    if (std::isfinite(d.cost(s))) out.push_back(s);
  return out;
}

}  // namespace fes
