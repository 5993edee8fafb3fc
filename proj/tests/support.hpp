#pragma once

// Generators and small oracles shared by the unit and acceptance binaries.

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fes/data/appliances.hpp"
#include "fes/rtpnn/rtpnn.hpp"
#include "fes/sched/scenario.hpp"
#include "fes/scheduling/scheduling_layer.hpp"

namespace fes::test {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Hand-built device with an explicit cost row.
inline DeviceSpec device(const std::string& name, double power, int duration, Eigen::VectorXd cost) {
  DeviceSpec d;
  d.name = name;
  d.power_kw = power;
  d.duration = duration;
  d.latest = static_cast<int>(cost.size());
  d.cost = std::move(cost);
  return d;
}

inline ScenarioWindow window(int slots, Eigen::VectorXd generation, double battery, double battery_max,
                             double inverter, std::vector<DeviceSpec> devices) {
  ScenarioWindow w;
  w.slots = slots;
  w.horizon_hours = slots;
  w.generation = std::move(generation);
  w.battery_kwh = battery;
  w.battery_max_kwh = battery_max;
  w.inverter_kw = inverter;
  w.devices = std::move(devices);
  return w;
}

/// The 2-device toy: S=4, a=1, E=1, Theta=1, g=[1,1,0,0], B=0, B_max=10,
/// both cost rows [0,1,2,3].
inline ScenarioWindow toy_two_devices() {
  Eigen::VectorXd c(4);
  c << 0, 1, 2, 3;
  Eigen::VectorXd g(4);
  g << 1, 1, 0, 0;
  return window(4, g, 0.0, 10.0, 1.0, {device("a", 1.0, 1, c), device("b", 1.0, 1, c)});
}

/// Small random instance (N <= max_devices, S <= max_slots). Costs are
/// random with occasional forbidden slots; capacities vary from tight to
/// loose so both feasible and infeasible instances occur.
inline ScenarioWindow random_small(std::mt19937_64& rng, int max_devices = 4, int max_slots = 8) {
  const int S = uniform_int(rng, 1, max_slots);
  const int N = uniform_int(rng, 1, max_devices);
  Eigen::VectorXd g(S);
  for (int s = 0; s < S; ++s) g(s) = uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : uniform(rng, 0.0, 4.0);
  const double bmax = uniform(rng, 0.0, 10.0);
  std::vector<DeviceSpec> devs;
  for (int n = 0; n < N; ++n) {
    const int a = uniform_int(rng, 1, std::min(3, S));
    Eigen::VectorXd c(S);
    for (int s = 0; s < S; ++s) c(s) = uniform(rng, 0.0, 1.0) < 0.15 ? kInf : uniform(rng, 0.0, 1.0);
    // quantised costs make ties common, which exercises the tie-break
    if (uniform(rng, 0.0, 1.0) < 0.3)
      for (int s = 0; s < S; ++s)
        if (std::isfinite(c(s))) c(s) = std::round(c(s) * 4.0) / 4.0;
    devs.push_back(device("d" + std::to_string(n), uniform(rng, 0.2, 3.0), a, c));
  }
  return window(S, g, uniform(rng, 0.0, 1.0) * bmax, bmax, uniform(rng, 0.5, 6.0), std::move(devs));
}

/// The household appliance day with random generation and battery level.
inline ScenarioWindow random_household(std::mt19937_64& rng) {
  Eigen::VectorXd g(24);
  const double peak = uniform(rng, 2.0, 20.0);
  for (int s = 0; s < 24; ++s) {
    const double x = (s - 6.0) / 12.0;
    g(s) = (x > 0.0 && x < 1.0) ? std::max(0.0, peak * std::sin(M_PI * x) + uniform(rng, -1.0, 1.0)) : 0.0;
  }
  data::ScenarioParams p;
  p.battery_fraction = uniform(rng, 0.05, 1.0);
  return data::default_scenario(g, p);
}

/// Head parameters drawn uniformly in [-spread, spread].
inline void randomize_heads(scheduling::FesModel& model, std::mt19937_64& rng, double spread = 3.0) {
  for (const auto& name : model.head_params().names()) {
    auto& m = model.head_params().get(name);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = uniform(rng, -spread, spread);
  }
}

inline scheduling::FesModel untrained_fes(const ScenarioWindow& scenario, int features = 0) {
  std::vector<std::string> names;
  for (const auto& d : scenario.devices) names.push_back(d.name);
  return scheduling::FesModel(rtpnn::RtpnnModel(features, {}), names, scenario.slots);
}

/// Random lagged window in normalised-range units.
inline rtpnn::TrainingWindow random_window(std::mt19937_64& rng, Eigen::Index slots, Eigen::Index series) {
  rtpnn::TrainingWindow w;
  w.input.older = Eigen::MatrixXd(slots, series);
  w.input.newer = Eigen::MatrixXd(slots, series);
  w.target = Eigen::VectorXd(slots);
  for (Eigen::Index s = 0; s < slots; ++s) {
    for (Eigen::Index f = 0; f < series; ++f) {
      w.input.older(s, f) = uniform(rng, 0.0, 1.0);
      w.input.newer(s, f) = uniform(rng, 0.0, 1.0);
    }
    w.target(s) = uniform(rng, 0.0, 1.0);
    w.input.timestamps.push_back(s);
  }
  return w;
}

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Central differences (h = 1e-5) of `loss()` against `grads` for every
/// entry of `store`. Relative error is |a - n| / max(|a|, |n|, floor).
template <typename Loss>
GradCheck finite_difference_check(nn::ParamStore& store, const nn::GradMap& grads, Loss&& loss,
                                   double floor = 1e-6) {
  GradCheck out;
  constexpr double h = 1e-5;
  for (const auto& name : store.names()) {
    auto& p = store.get(name);
    const auto it = grads.find(name);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p(i);
      p(i) = keep + h;
      const double up = loss();
      p(i) = keep - h;
      const double down = loss();
      p(i) = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = it == grads.end() ? 0.0 : it->second(i);
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        out.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fes_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fes::test
