#include "fes/data/appliances.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fes/errors.hpp"

namespace fes::data {

namespace {

Eigen::VectorXd gaussian_row(const DeviceSpec& d, int slots, int lo, int hi) {
  if (!(d.sigma > 0.0)) throw ParameterError("device '" + d.name + "': sigma must be > 0");
  Eigen::VectorXd row(slots);
  const double norm = 1.0 / (d.sigma * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < slots; ++i) {
    const int s = i + 1;
    if (s < lo || s > hi) {
      row(i) = std::numeric_limits<double>::infinity();
      continue;
    }
    const double z = (s - d.desired_start) / d.sigma;
    row(i) = 1.0 - norm * std::exp(-0.5 * z * z);
  }
  return row;
}

int latest_or_last(const DeviceSpec& d, int slots) { return d.latest > 0 ? d.latest : slots; }

}  // namespace

Eigen::VectorXd cost_profile(const DeviceSpec& device, int slots) {
  return gaussian_row(device, slots, device.earliest, latest_or_last(device, slots));
}

Eigen::VectorXd scenario_cost_row(const DeviceSpec& device, int slots) {
  const int last = slots - device.duration + 1;
  const int lo = std::min(std::max(device.earliest, 1), last);
  const int hi = std::max(std::min(latest_or_last(device, slots), last), lo);
  return gaussian_row(device, slots, lo, hi);
}

Eigen::VectorXd cap_infinite(const Eigen::VectorXd& row, double cap) {
  return row.unaryExpr([cap](double c) { return std::isfinite(c) ? c : cap; });
}

std::vector<DeviceSpec> default_devices() {
  auto dev = [](std::string name, double kw, int a, double mu, double sigma, int earliest = 1, int latest = 0) {
    DeviceSpec d;
    d.name = std::move(name);
    d.power_kw = kw;
    d.duration = a;
    d.desired_start = mu;
    d.sigma = sigma;
    d.earliest = earliest;
    d.latest = latest;
    return d;
  };
  return {
      dev("Washing Machine", 2.3, 2, 14, 3),
      dev("Dryer", 3.0, 2, 16, 3, 15),
      dev("Robot Vacuum Cleaner", 0.007, 2, 15, 5),
      dev("Iron", 1.08, 2, 8, 1),
      dev("TV", 0.15, 3, 20, 2),
      dev("Refrigerator", 0.083, 24, 1, 1),
      dev("Oven", 2.3, 1, 18, 2),
      dev("Dishwasher", 2.0, 2, 21, 2),
      dev("Electric Water Heater (morning)", 0.7, 1, 6, 1),
      dev("Electric Water Heater (evening)", 0.7, 1, 17, 1),
      dev("Central AC (morning)", 3.0, 2, 6, 2),
      dev("Central AC (evening)", 3.0, 2, 18, 2),
      dev("Pool Filter Pump", 1.12, 8, 10, 3),
      dev("Electric Vehicle Charger", 7.7, 8, 21, 2, 18, 23),
  };
}

ScenarioWindow make_scenario(const std::vector<DeviceSpec>& devices, const Eigen::VectorXd& generation,
                             const ScenarioParams& params, std::int64_t start_hour) {
  ScenarioWindow sc;
  sc.slots = params.slots;
  sc.horizon_hours = params.horizon_hours;
  sc.start_hour = start_hour;
  sc.generation = generation;
  sc.battery_max_kwh = params.battery_max_kwh;
  sc.battery_kwh = params.battery_fraction * params.battery_max_kwh;
  sc.inverter_kw = params.inverter_kw;
  sc.devices = devices;
  for (auto& d : sc.devices) d.cost = scenario_cost_row(d, params.slots);
  sc.check();
  return sc;
}

ScenarioWindow default_scenario(const Eigen::VectorXd& generation, const ScenarioParams& params) {
  return make_scenario(default_devices(), generation, params);
}

std::vector<DeviceSpec> parse_devices(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("device file: ") + e.what());
  }
  if (!j.is_array()) throw ConfigError("device file: expected a JSON array of devices");
  std::vector<DeviceSpec> out;
  for (const auto& item : j) {
    try {
      DeviceSpec d;
      d.name = item.at("name").get<std::string>();
      d.power_kw = item.at("power_kw").get<double>();
      d.duration = item.at("duration_slots").get<int>();
      d.desired_start = item.at("desired_start").get<double>();
      d.sigma = item.at("sigma").get<double>();
      d.earliest = item.value("earliest", 1);
      d.latest = item.value("latest", 0);
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("device file: ") + e.what());
    }
  }
  return out;
}

std::vector<DeviceSpec> load_devices(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open device file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_devices(ss.str());
}

std::string devices_to_json(const std::vector<DeviceSpec>& devices) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& d : devices) {
    j.push_back({{"name", d.name},
                 {"power_kw", d.power_kw},
                 {"duration_slots", d.duration},
                 {"desired_start", d.desired_start},
                 {"sigma", d.sigma},
                 {"earliest", d.earliest},
                 {"latest", d.latest}});
  }
  return j.dump(2);
}

}  // namespace fes::data
