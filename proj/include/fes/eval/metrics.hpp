#pragma once

#include <Eigen/Core>

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fes::eval {

struct ForecastMetrics {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;  ///< percent; empty when every actual is zero
  double smape = 0.0;          ///< percent, in [0, 200]
  std::size_t count = 0;       ///< slots entering MSE/MAE/SMAPE
  std::size_t mape_skipped = 0;
};

/// MAPE skips zero actuals; SMAPE counts a 0/0 term as 0. With
/// `exclude_zero_actuals` every metric is restricted to nonzero actuals.
ForecastMetrics forecast_metrics(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast,
                                 bool exclude_zero_actuals = false);

struct GapStats {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);
GapStats summarize(const std::vector<double>& values);

struct MethodGaps {
  std::vector<double> objective;
  std::vector<double> gap_abs;
  std::vector<double> gap_pct;  ///< 100 * gap_abs / exact objective
  GapStats abs;
  GapStats pct;
};

struct CostGapReport {
  std::vector<std::string> days;
  std::vector<double> exact;
  std::map<std::string, MethodGaps> methods;
};

/// Per-day gaps of each method against the exact objectives. Throws
/// DataError when a method's day count differs from `exact`.
CostGapReport cost_gap(const std::vector<std::string>& days, const std::vector<double>& exact,
                       const std::map<std::string, std::vector<double>>& methods);

/// `day,method,objective,gap_abs,gap_pct`, exact rows included.
std::string boxplot_csv(const CostGapReport& report);
std::string gap_summary_csv(const CostGapReport& report);

struct TimingRow {
  std::string method;
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

struct TimingTable {
  std::vector<TimingRow> rows;
  std::optional<double> fes_vs_exact;  ///< exact mean / fes mean
};

/// A timed unit of work for window `w`.
using TimedTask = std::function<void(std::size_t w)>;

/// Runs every method on every window `repetitions` times after one untimed
/// warm-up call on window 0. repetitions = 0 yields an empty table.
TimingTable timing_bench(const std::vector<std::pair<std::string, TimedTask>>& methods, std::size_t windows,
                         int repetitions);

std::string timing_csv(const TimingTable& table);

/// Aligned console table; `header` becomes the first row.
std::string format_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace fes::eval
