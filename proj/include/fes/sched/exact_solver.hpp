#pragma once

#include <cstdint>
#include <optional>

#include "fes/sched/scenario.hpp"

namespace fes {

struct Solution {
  Schedule schedule;
  double objective = 0.0;
  std::uint64_t nodes = 0;  ///< search nodes expanded (B&B) or combinations visited
};

/// Depth-first branch-and-bound for the dissatisfaction-minimisation problem.
///
/// Devices are branched fewest-allowed-starts first, start slots cheapest
/// first. The bound is the accumulated cost plus the row minimum of every
/// unassigned device. Infinite costs are hard exclusions. Among optimal
/// schedules the one with the lexicographically smallest start vector (in
/// device order) is returned. Returns nullopt when no assignment satisfies
/// the constraints.
std::optional<Solution> solve_exact(const ScenarioWindow& scenario);

enum class BruteForceStatus { Optimal, Infeasible, CapExceeded };

struct BruteForceResult {
  BruteForceStatus status = BruteForceStatus::Infeasible;
  std::optional<Solution> solution;
  /// Product of allowed-start counts; saturates at UINT64_MAX.
  std::uint64_t combinations = 0;
};

/// Exhaustive enumeration over allowed starts, checked with `validate`.
/// Refuses to run when the search space exceeds `cap`.
BruteForceResult enumerate_bruteforce(const ScenarioWindow& scenario, std::uint64_t cap);

}  // namespace fes
