#pragma once

#include <cstdint>
#include <vector>

#include "fes/sched/scenario.hpp"

namespace fes {

struct GaConfig {
  int initial_samples = 5000;
  int population = 200;
  int generations = 1000;
  double mutation_probability = 0.1;
  int offspring = 200;       ///< children per generation
  int repair_attempts = 20;  ///< redraws before an infeasible child is dropped
  std::uint64_t seed = 1;

  void check() const;
};

struct GaResult {
  Schedule schedule;
  double objective = 0.0;
  /// Best objective after initialisation (index 0) and after each generation.
  std::vector<double> history;
  std::size_t feasible_seeds = 0;
  std::uint64_t evaluations = 0;
};

/// Elitist GA over start vectors (one gene per device, restricted to its
/// allowed starts). Single-point crossover over the device list; mutation
/// redraws one device's start. Infeasible children are repaired by redrawing
/// a device that is active in the first violated slot, then dropped if still
/// infeasible. Parents and children are pooled and truncated to the best
/// `population`. Throws InfeasibleError (device = SIZE_MAX) when the initial
/// sample holds no feasible chromosome.
GaResult ga_solve(const ScenarioWindow& scenario, const GaConfig& config = {});

/// CSV `generation,best_objective`.
std::string ga_history_csv(const GaResult& result);

}  // namespace fes
