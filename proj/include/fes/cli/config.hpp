#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fes/data/appliances.hpp"
#include "fes/data/series.hpp"
#include "fes/data/synthetic.hpp"
#include "fes/eval/baselines.hpp"
#include "fes/rtpnn/rtpnn.hpp"
#include "fes/sched/ga_solver.hpp"
#include "fes/scheduling/scheduling_layer.hpp"

namespace fes::cli {

struct DataSection {
  std::string source = "csv";  ///< "csv" or "synthetic"
  std::filesystem::path generation_csv;
  std::filesystem::path weather_csv;
  std::vector<std::string> features;  ///< empty = every numeric weather column
  data::SyntheticConfig synthetic;
};

struct EvalSection {
  bool exclude_nights = false;
  bool baselines = true;
  bool timing = false;
  int repetitions = 3;
  std::vector<double> battery_sweep = {1.0};  ///< fractions of B_max
};

/// Every knob of a run. Loaded from a JSON file with one object per module;
/// absent keys keep their defaults, unknown keys are a ConfigError.
struct RunConfig {
  std::uint64_t seed = 1;
  DataSection data;
  data::SplitSpec split;
  data::LagSpec lags;
  std::filesystem::path devices_file;  ///< empty = built-in appliance table
  data::ScenarioParams scenario;
  std::optional<std::vector<double>> scenario_generation;  ///< fixed kW per slot, bypasses the data
  rtpnn::RtpnnConfig rtpnn;
  rtpnn::Stage1Config stage1;
  scheduling::Stage2Config stage2;
  GaConfig ga;
  eval::MlpConfig mlp;
  EvalSection eval;
  std::filesystem::path checkpoint_dir;  ///< empty = the output directory

  void check() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved config, every field present; round-trips through parse_config.
std::string config_to_json(const RunConfig& config);

/// Deterministic per-component seed derived from the run seed.
std::uint64_t fork_seed(std::uint64_t seed, const std::string& component);

/// Applies the forked seeds to every seeded component.
void apply_seed(RunConfig& config, std::uint64_t seed);

}  // namespace fes::cli
