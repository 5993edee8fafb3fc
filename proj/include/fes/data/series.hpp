#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fes/rtpnn/rtpnn.hpp"
#include "fes/time.hpp"

namespace fes::data {

struct IngestReport {
  std::size_t generation_rows = 0;
  std::size_t weather_rows = 0;
  std::size_t output_rows = 0;
  std::size_t imputed_rows = 0;
};

/// Hourly generation joined with F weather features.
struct SeriesTable {
  std::vector<EpochHours> timestamps;  ///< strictly increasing by one hour
  Eigen::VectorXd generation;          ///< kW
  Eigen::MatrixXd features;            ///< rows x F
  std::vector<std::string> feature_names;
  std::vector<bool> imputed;  ///< row was forward-filled on either side
  IngestReport report;

  std::size_t rows() const noexcept { return timestamps.size(); }
  int feature_count() const noexcept { return static_cast<int>(features.cols()); }
};

/// Joins `timestamp,gen_kw` with `timestamp,<feature...>` on the hour.
/// Rows outside the common time range are dropped; interior gaps (missing
/// hours or empty cells) are forward-filled and flagged.
SeriesTable ingest(const std::filesystem::path& generation_csv, const std::filesystem::path& weather_csv);

/// Same as `ingest` on in-memory CSV text; `gen_name`/`weather_name` label errors.
SeriesTable ingest_text(const std::string& generation_csv, const std::string& weather_csv,
                        const std::string& gen_name = "generation", const std::string& weather_name = "weather");

/// Keeps only the named feature columns, in the given order.
SeriesTable select_features(const SeriesTable& table, const std::vector<std::string>& names);

std::string generation_csv(const SeriesTable& table);
std::string weather_csv(const SeriesTable& table);

struct LagSpec {
  int generation_hours = 24;  ///< tau_0
  int feature_hours = 24;     ///< tau_f, shared by every feature
};

struct SplitSpec {
  int train_days = 300;
  int test_days = 361;  ///< 0 = every window left after the training split
  int slots = 24;
  /// Skip ceil(2 tau / 24) windows between the splits so no test input lag
  /// reaches back into a training target.
  bool purge_gap = true;
};

/// One window per day starting at 00:00, S hourly slots.
struct WindowSet {
  std::vector<rtpnn::TrainingWindow> train;
  std::vector<rtpnn::TrainingWindow> test;
};

/// Every window the table can resolve, in chronological order.
std::vector<rtpnn::TrainingWindow> all_windows(const SeriesTable& table, int slots, const LagSpec& lags = {});

/// Chronological train/test split of `all_windows`.
WindowSet build_windows(const SeriesTable& table, const SplitSpec& split, const LagSpec& lags = {});

}  // namespace fes::data
