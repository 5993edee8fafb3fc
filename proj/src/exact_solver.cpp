#include "fes/sched/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fes/sched/constraints.hpp"

namespace fes {

namespace {

// (objective, start vector) total order used by both solvers.
bool better(double obj, const std::vector<int>& starts, const std::optional<Solution>& best,
            const std::vector<int>& best_starts) {
  if (!best) return true;
  if (obj != best->objective) return obj < best->objective;
  return starts < best_starts;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const ScenarioWindow& scenario) : sc_(scenario), starts_(scenario.device_count(), -1) {
    const std::size_t N = sc_.device_count();
    candidates_.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
      auto c = allowed_starts(sc_, n);
      const auto& cost = sc_.devices[n].cost;
      std::stable_sort(c.begin(), c.end(), [&cost](int a, int b) { return cost(a) < cost(b); });
      candidates_[n] = std::move(c);
    }
    order_.resize(N);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [this](std::size_t a, std::size_t b) { return candidates_[a].size() < candidates_[b].size(); });
    suffix_min_.assign(N + 1, 0.0);
    for (std::size_t k = N; k-- > 0;) {
      const auto& c = candidates_[order_[k]];
      const double row_min = c.empty() ? std::numeric_limits<double>::infinity() : sc_.devices[order_[k]].cost(c.front());
      suffix_min_[k] = suffix_min_[k + 1] + row_min;
    }
    // Energy every device must draw by the end of slot s wherever it starts;
    // the unplaced devices' share has to fit the cumulative slack.
    const double dt = sc_.slot_hours();
    min_energy_.resize(N);
    reserve_ = Eigen::VectorXd::Zero(sc_.slots);
    for (std::size_t n = 0; n < N; ++n) {
      const auto& d = sc_.devices[n];
      Eigen::VectorXd row = Eigen::VectorXd::Zero(sc_.slots);
      for (int s = 0; s < sc_.slots; ++s) {
        int least = d.duration;
        for (int t : candidates_[n]) least = std::min(least, std::clamp(s - t + 1, 0, d.duration));
        row(s) = d.power_kw * dt * least;
      }
      min_energy_[n] = row;
      reserve_ += row;
    }
  }

  std::optional<Solution> run() {
    if (!std::isfinite(suffix_min_[0])) return std::nullopt;
    LoadTracker tracker(sc_);
    if (!fits(tracker, reserve_)) return std::nullopt;
    search(0, 0.0, tracker);
    if (best_) best_->nodes = nodes_;
    return best_;
  }

 private:
  void search(std::size_t depth, double acc, const LoadTracker& tracker) {
    ++nodes_;
    if (depth == order_.size()) {
      Schedule sched = Schedule::from_starts(starts_, sc_.slots);
      const double obj = objective(sched, sc_);
      if (better(obj, starts_, best_, best_starts_)) {
        best_ = Solution{std::move(sched), obj, 0};
        best_starts_ = starts_;
      }
      return;
    }
    const std::size_t n = order_[depth];
    const auto& cost = sc_.devices[n].cost;
    for (int s : candidates_[n]) {
      const double bound = acc + cost(s) + suffix_min_[depth + 1];
      // Candidates are cost-sorted, so once the bound clears the incumbent
      // nothing later in this row can tie or improve it.
      if (best_ && bound > best_->objective + 1e-9 * std::max(1.0, std::abs(best_->objective))) break;
      if (!tracker.can_place(n, s)) continue;
      LoadTracker next = tracker;
      next.place(n, s);
      if (!fits(next, reserve_ - min_energy_[n])) continue;
      reserve_ -= min_energy_[n];
      starts_[n] = s;
      search(depth + 1, acc + cost(s), next);
      starts_[n] = -1;
      reserve_ += min_energy_[n];
    }
  }

  static bool fits(const LoadTracker& tracker, const Eigen::VectorXd& reserve) {
    return ((tracker.cum_slack() - reserve).array() >= -kFeasibilityTol).all();
  }

  const ScenarioWindow& sc_;
  std::vector<std::vector<int>> candidates_;
  std::vector<std::size_t> order_;
  std::vector<double> suffix_min_;
  std::vector<Eigen::VectorXd> min_energy_;
  Eigen::VectorXd reserve_;  ///< sum of min_energy_ over unplaced devices
  std::vector<int> starts_;
  std::optional<Solution> best_;
  std::vector<int> best_starts_;
  std::uint64_t nodes_ = 0;
};

}  // namespace

std::optional<Solution> solve_exact(const ScenarioWindow& scenario) {
  scenario.check();
  return BranchAndBound(scenario).run();
}

BruteForceResult enumerate_bruteforce(const ScenarioWindow& scenario, std::uint64_t cap) {
  scenario.check();
  const std::size_t N = scenario.device_count();
  std::vector<std::vector<int>> allowed(N);
  std::uint64_t product = 1;
  for (std::size_t n = 0; n < N; ++n) {
    allowed[n] = allowed_starts(scenario, n);
    const auto k = static_cast<std::uint64_t>(allowed[n].size());
    if (k != 0 && product > std::numeric_limits<std::uint64_t>::max() / k)
      product = std::numeric_limits<std::uint64_t>::max();
    else
      product *= k;
  }
  BruteForceResult result;
  result.combinations = product;
  if (product > cap) {
    result.status = BruteForceStatus::CapExceeded;
    return result;
  }
  if (product == 0) {
    result.status = BruteForceStatus::Infeasible;
    return result;
  }

  // Odometer over allowed starts; device 0 is the most significant digit so
  // combinations are visited in lexicographic order of the start vector.
  std::vector<std::size_t> digit(N, 0);
  std::vector<int> starts(N), best_starts;
  std::optional<Solution> best;
  std::uint64_t visited = 0;
  for (;;) {
    for (std::size_t n = 0; n < N; ++n) starts[n] = allowed[n][digit[n]];
    Schedule sched = Schedule::from_starts(starts, scenario.slots);
    ++visited;
    if (is_feasible(sched, scenario)) {
      const double obj = objective(sched, scenario);
      if (better(obj, starts, best, best_starts)) {
        best = Solution{std::move(sched), obj, 0};
        best_starts = starts;
      }
    }
    std::size_t k = N;
    while (k > 0) {
      --k;
      if (++digit[k] < allowed[k].size()) break;
      digit[k] = 0;
      if (k == 0) {
        k = N + 1;
        break;
      }
    }
    if (k == N + 1 || N == 0) break;
  }
  if (best) {
    best->nodes = visited;
    result.status = BruteForceStatus::Optimal;
    result.solution = std::move(best);
  } else {
    result.status = BruteForceStatus::Infeasible;
  }
  return result;
}

}  // namespace fes
