#pragma once

#include <cstdint>

#include "fes/data/series.hpp"

namespace fes::data {

/// Hourly PV series with a seasonal day length, persistent day-to-day
/// clearness (AR(1)), hourly clearness noise and measurement noise. Weather
/// columns: cloud_cover (%), temperature (C), clear_sky (W/m2). Output is
/// clipped at the inverter rating `clip_kw` (0 disables clipping).
struct SyntheticConfig {
  int days = 120;
  double peak_kw = 20.0;
  double day_persistence = 0.8;
  double day_sigma = 0.15;
  double hour_sigma = 0.2;
  double noise_kw = 0.5;
  double clip_kw = 15.0;
  double mean_clearness = 0.7;
  double season_hours = 0.0;  ///< day-length swing around 12 h; 0 keeps every day alike
  std::uint64_t seed = 1;
  EpochHours start = 403224;  ///< 2016-01-01 00:00
};

SeriesTable synthetic_series(const SyntheticConfig& config);

}  // namespace fes::data
