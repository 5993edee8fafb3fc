#pragma once

// Library side of the `fes` command-line tool. Each command reads a resolved
// RunConfig, writes its artifacts into `out_dir` (plus resolved_config.json)
// and logs progress and warnings to `log`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fes/cli/config.hpp"
#include "fes/data/series.hpp"
#include "fes/eval/metrics.hpp"
#include "fes/rtpnn/rtpnn.hpp"
#include "fes/sched/scenario.hpp"
#include "fes/scheduling/scheduling_layer.hpp"

namespace fes::cli {

enum class Method { Fes, Exact, Ga };

/// Throws UsageError listing fes|exact|ga for anything else.
Method parse_method(const std::string& name);
std::string to_string(Method m);

/// Table named by the config: the joined CSV pair or the synthetic series,
/// restricted to `data.features` when given.
data::SeriesTable load_table(const RunConfig& config);

std::vector<DeviceSpec> load_device_list(const RunConfig& config);

/// Scenario for one window with the given generation and battery fraction.
ScenarioWindow window_scenario(const RunConfig& config, const std::vector<DeviceSpec>& devices,
                               const Eigen::VectorXd& generation, double battery_fraction,
                               std::int64_t start_hour = 0);

/// Checkpoint directory actually used for a run.
std::filesystem::path checkpoint_dir(const RunConfig& config, const std::filesystem::path& out_dir);

struct IngestSummary {
  data::IngestReport report;
  std::size_t windows = 0;
};

/// Writes generation.csv, weather.csv and ingest_report.json.
IngestSummary cmd_ingest(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

struct TrainSummary {
  std::size_t train_windows = 0;
  std::size_t labelled = 0;
  std::size_t skipped = 0;  ///< days with no feasible schedule under their forecast
  std::uint64_t rtpnn_checksum = 0;
  std::uint64_t fes_checksum = 0;
};

/// Stage 1, exact labels on the forecast generation, Stage 2. Writes
/// rtpnn.ckpt, fes.ckpt, stage1_loss.csv, stage2_loss.csv, train_summary.json.
TrainSummary cmd_train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

struct ScheduleOutcome {
  Schedule schedule;
  double objective = 0.0;
  ScenarioWindow scenario;
};

/// Schedules one test day (`day` is a 0-based test-window index or a
/// YYYY-MM-DD date), or the fixed `scenario.generation` when configured.
/// Writes schedule.csv (+ forecast.csv, ga_history.csv, soft_schedule.csv as
/// applicable) and schedule_summary.json.
ScheduleOutcome cmd_schedule(const RunConfig& config, const std::filesystem::path& out_dir, Method method,
                             const std::string& day, std::ostream& log);

struct EvaluateSummary {
  std::vector<std::pair<std::string, eval::ForecastMetrics>> test_metrics;  ///< per model
  std::vector<std::pair<double, eval::CostGapReport>> gaps;                  ///< per battery fraction
  std::size_t skipped_days = 0;
};

/// Forecast metrics (rtpnn and baselines), cost gaps per battery fraction and,
/// with `eval.timing`, the timing table.
EvaluateSummary cmd_evaluate(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Per-window wall time of fes, exact and ga on up to `max_windows` test
/// windows. Writes timing.csv.
eval::TimingTable cmd_bench(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log,
                            std::size_t max_windows = 10);

}  // namespace fes::cli
