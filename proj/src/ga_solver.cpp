#include "fes/sched/ga_solver.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fes/errors.hpp"
#include "fes/nn/checkpoint.hpp"
#include "fes/sched/constraints.hpp"

namespace fes {

void GaConfig::check() const {
  if (initial_samples < 1 || population < 1 || generations < 0 || offspring < 0 || repair_attempts < 0)
    throw ConfigError("ga: sample, population and offspring counts must be positive");
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0))
    throw ConfigError("ga: mutation probability must lie in [0, 1]");
}

namespace {

struct Individual {
  std::vector<int> genes;
  double objective = 0.0;
};

class Evaluator {
 public:
  explicit Evaluator(const ScenarioWindow& sc) : sc_(sc) {
    const double dt = sc.slot_hours();
    double cum = 0.0;
    cap_.resize(static_cast<std::size_t>(sc.slots));
    budget_.resize(static_cast<std::size_t>(sc.slots));
    for (int s = 0; s < sc.slots; ++s) {
      cap_[static_cast<std::size_t>(s)] = std::min(sc.inverter_kw, sc.generation(s) + sc.battery_max_kwh);
      cum += sc.generation(s) * dt;
      budget_[static_cast<std::size_t>(s)] = sc.battery_kwh + cum;
    }
    load_.resize(static_cast<std::size_t>(sc.slots));
  }

  /// First violated slot, or -1 when feasible. Genes are always allowed
  /// starts, so only the capacity constraints can fail.
  int first_violation(const std::vector<int>& genes) {
    ++evaluations;
    std::fill(load_.begin(), load_.end(), 0.0);
    for (std::size_t n = 0; n < genes.size(); ++n) {
      const auto& d = sc_.devices[n];
      for (int s = genes[n]; s < genes[n] + d.duration; ++s) load_[static_cast<std::size_t>(s)] += d.power_kw;
    }
    const double dt = sc_.slot_hours();
    double cum = 0.0;
    for (std::size_t s = 0; s < load_.size(); ++s) {
      cum += load_[s] * dt;
      if (load_[s] > cap_[s] + kFeasibilityTol || cum > budget_[s] + kFeasibilityTol) return static_cast<int>(s);
    }
    return -1;
  }

  double objective(const std::vector<int>& genes) const {
    double total = 0.0;
    for (std::size_t n = 0; n < genes.size(); ++n) total += sc_.devices[n].cost(genes[n]);
    return total;
  }

  std::uint64_t evaluations = 0;

 private:
  const ScenarioWindow& sc_;
  std::vector<double> cap_, budget_, load_;
};

}  // namespace

GaResult ga_solve(const ScenarioWindow& scenario, const GaConfig& config) {
  scenario.check();
  config.check();
  const std::size_t N = scenario.device_count();
  std::vector<std::vector<int>> allowed(N);
  for (std::size_t n = 0; n < N; ++n) {
    allowed[n] = allowed_starts(scenario, n);
    if (allowed[n].empty())
      throw InfeasibleError(n, "ga: device '" + scenario.devices[n].name + "' has no admissible start");
  }

  std::mt19937_64 rng(config.seed);
  auto uniform_index = [&rng](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  auto draw = [&](std::size_t n) { return allowed[n][uniform_index(allowed[n].size())]; };
  Evaluator eval(scenario);

  auto by_objective = [](const Individual& a, const Individual& b) { return a.objective < b.objective; };

  std::vector<Individual> pop;
  for (int i = 0; i < config.initial_samples; ++i) {
    Individual ind;
    ind.genes.resize(N);
    for (std::size_t n = 0; n < N; ++n) ind.genes[n] = draw(n);
    if (eval.first_violation(ind.genes) < 0) {
      ind.objective = eval.objective(ind.genes);
      pop.push_back(std::move(ind));
    }
  }
  if (pop.empty())
    throw InfeasibleError(std::numeric_limits<std::size_t>::max(),
                          "ga: no feasible chromosome among " + std::to_string(config.initial_samples) +
                              " random samples");

  GaResult result;
  result.feasible_seeds = pop.size();
  std::stable_sort(pop.begin(), pop.end(), by_objective);
  if (pop.size() > static_cast<std::size_t>(config.population)) pop.resize(static_cast<std::size_t>(config.population));
  result.history.push_back(pop.front().objective);

  std::bernoulli_distribution mutate(config.mutation_probability);
  for (int g = 0; g < config.generations; ++g) {
    std::vector<Individual> pool = pop;
    for (int c = 0; c < config.offspring; ++c) {
      const auto& p1 = pop[uniform_index(pop.size())];
      const auto& p2 = pop[uniform_index(pop.size())];
      Individual child;
      child.genes = p1.genes;
      if (N > 1) {
        const std::size_t cut = 1 + uniform_index(N - 1);
        std::copy(p2.genes.begin() + static_cast<std::ptrdiff_t>(cut), p2.genes.end(),
                  child.genes.begin() + static_cast<std::ptrdiff_t>(cut));
      }
      if (mutate(rng) && N > 0) {
        const std::size_t n = uniform_index(N);
        child.genes[n] = draw(n);
      }
      int bad = eval.first_violation(child.genes);
      for (int attempt = 0; bad >= 0 && attempt < config.repair_attempts; ++attempt) {
        std::vector<std::size_t> culprits;
        for (std::size_t n = 0; n < N; ++n)
          if (child.genes[n] <= bad && bad < child.genes[n] + scenario.devices[n].duration) culprits.push_back(n);
        if (culprits.empty())  // cumulative shortfall with nothing running at that slot
          for (std::size_t n = 0; n < N; ++n)
            if (child.genes[n] <= bad) culprits.push_back(n);
        if (culprits.empty()) break;
        const std::size_t n = culprits[uniform_index(culprits.size())];
        child.genes[n] = draw(n);
        bad = eval.first_violation(child.genes);
      }
      if (bad >= 0) continue;
      child.objective = eval.objective(child.genes);
      pool.push_back(std::move(child));
    }
    std::stable_sort(pool.begin(), pool.end(), by_objective);
    if (pool.size() > static_cast<std::size_t>(config.population)) pool.resize(static_cast<std::size_t>(config.population));
    pop = std::move(pool);
    result.history.push_back(pop.front().objective);
  }

  result.schedule = Schedule::from_starts(pop.front().genes, scenario.slots);
  result.objective = objective(result.schedule, scenario);
  result.evaluations = eval.evaluations;
  return result;
}

std::string ga_history_csv(const GaResult& result) {
  std::ostringstream os;
  os << "generation,best_objective\n";
  for (std::size_t g = 0; g < result.history.size(); ++g)
    os << g << ',' << nn::format_double(result.history[g]) << '\n';
  return os.str();
}

}  // namespace fes
