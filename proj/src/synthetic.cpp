#include "fes/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fes/errors.hpp"

namespace fes::data {

SeriesTable synthetic_series(const SyntheticConfig& c) {
  if (c.days < 1 || c.peak_kw <= 0.0 || c.day_sigma < 0.0 || c.hour_sigma < 0.0 || c.noise_kw < 0.0 ||
      std::abs(c.day_persistence) >= 1.0 || c.clip_kw < 0.0 || c.mean_clearness <= 0.0 || c.mean_clearness > 1.0 ||
      c.season_hours < 0.0 || c.season_hours >= 12.0)
    throw ParameterError("synthetic: invalid configuration");
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double pi = std::numbers::pi;
  const double mean_clearness = c.mean_clearness;

  const auto rows = static_cast<Eigen::Index>(c.days) * 24;
  SeriesTable t;
  t.feature_names = {"cloud_cover", "temperature", "clear_sky"};
  t.generation.resize(rows);
  t.features.resize(rows, 3);
  double day_k = mean_clearness;
  for (int d = 0; d < c.days; ++d) {
    day_k = mean_clearness + c.day_persistence * (day_k - mean_clearness) + c.day_sigma * normal(rng);
    day_k = std::clamp(day_k, 0.05, 1.0);
    const double season = std::sin(2.0 * pi * (d - 80) / 365.0);
    const double daylen = 12.0 + c.season_hours * season;
    const double sunrise = 12.0 - daylen / 2.0;
    double hour_dev = 0.0;
    for (int h = 0; h < 24; ++h) {
      const Eigen::Index r = static_cast<Eigen::Index>(d) * 24 + h;
      const double x = (h + 0.5 - sunrise) / daylen;
      const double clear = (x > 0.0 && x < 1.0) ? std::sin(pi * x) : 0.0;
      hour_dev = 0.6 * hour_dev + c.hour_sigma * normal(rng);
      const double k = std::clamp(day_k + hour_dev, 0.0, 1.0);
      double g = 0.0;
      if (clear > 0.0) g = std::max(0.0, c.peak_kw * clear * k + c.noise_kw * normal(rng));
      if (c.clip_kw > 0.0) g = std::min(g, c.clip_kw);
      t.timestamps.push_back(c.start + r);
      t.imputed.push_back(false);
      t.generation(r) = g;
      t.features(r, 0) = std::clamp(100.0 * (1.0 - day_k) + 5.0 * normal(rng), 0.0, 100.0);
      t.features(r, 1) = 12.0 + 6.0 * season + 6.0 * clear * k + normal(rng);
      t.features(r, 2) = 1000.0 * clear;
    }
  }
  t.report.generation_rows = t.report.weather_rows = t.report.output_rows = t.rows();
  return t;
}

}  // namespace fes::data
