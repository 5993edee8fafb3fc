#include "fes/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "fes/errors.hpp"
#include "fes/nn/checkpoint.hpp"

namespace fes::eval {

ForecastMetrics forecast_metrics(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast,
                                 bool exclude_zero_actuals) {
  if (actual.size() != forecast.size() || actual.size() == 0)
    throw ShapeError("metrics: actual and forecast need equal nonzero lengths (" + std::to_string(actual.size()) +
                     " vs " + std::to_string(forecast.size()) + ")");
  ForecastMetrics m;
  double se = 0.0, ae = 0.0, ape = 0.0, sape = 0.0;
  std::size_t mape_n = 0;
  for (Eigen::Index i = 0; i < actual.size(); ++i) {
    const double a = actual(i), f = forecast(i);
    if (exclude_zero_actuals && a == 0.0) continue;
    const double e = a - f;
    se += e * e;
    ae += std::abs(e);
    const double denom = std::abs(a) + std::abs(f);
    if (denom > 0.0) sape += 2.0 * std::abs(e) / denom;
    if (a != 0.0) {
      ape += std::abs(e / a);
      ++mape_n;
    } else {
      ++m.mape_skipped;
    }
    ++m.count;
  }
  if (m.count == 0) {
    m.mape.reset();
    return m;
  }
  const auto n = static_cast<double>(m.count);
  m.mse = se / n;
  m.mae = ae / n;
  m.smape = 100.0 * sape / n;
  if (mape_n > 0) m.mape = 100.0 * ape / static_cast<double>(mape_n);
  return m;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

GapStats summarize(const std::vector<double>& values) {
  GapStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

CostGapReport cost_gap(const std::vector<std::string>& days, const std::vector<double>& exact,
                       const std::map<std::string, std::vector<double>>& methods) {
  if (days.size() != exact.size())
    throw DataError("cost gap: " + std::to_string(days.size()) + " day labels for " + std::to_string(exact.size()) +
                    " exact objectives");
  CostGapReport r;
  r.days = days;
  r.exact = exact;
  for (const auto& [name, obj] : methods) {
    if (obj.size() != exact.size())
      throw DataError("cost gap: method '" + name + "' has " + std::to_string(obj.size()) + " days, exact has " +
                      std::to_string(exact.size()));
    MethodGaps g;
    g.objective = obj;
    for (std::size_t d = 0; d < obj.size(); ++d) {
      const double gap = obj[d] - exact[d];
      g.gap_abs.push_back(gap);
      g.gap_pct.push_back(exact[d] != 0.0 ? 100.0 * gap / std::abs(exact[d]) : 0.0);
    }
    g.abs = summarize(g.gap_abs);
    g.pct = summarize(g.gap_pct);
    r.methods.emplace(name, std::move(g));
  }
  return r;
}

std::string boxplot_csv(const CostGapReport& r) {
  using nn::format_double;
  std::ostringstream os;
  os << "day,method,objective,gap_abs,gap_pct\n";
  for (std::size_t d = 0; d < r.days.size(); ++d) {
    os << r.days[d] << ",exact," << format_double(r.exact[d]) << ",0,0\n";
    for (const auto& [name, g] : r.methods)
      os << r.days[d] << ',' << name << ',' << format_double(g.objective[d]) << ',' << format_double(g.gap_abs[d])
         << ',' << format_double(g.gap_pct[d]) << '\n';
  }
  return os.str();
}

std::string gap_summary_csv(const CostGapReport& r) {
  using nn::format_double;
  std::ostringstream os;
  os << "method,unit,mean,median,q1,q3,max\n";
  for (const auto& [name, g] : r.methods) {
    for (const auto& [unit, s] : {std::pair{"abs", g.abs}, std::pair{"pct", g.pct}})
      os << name << ',' << unit << ',' << format_double(s.mean) << ',' << format_double(s.median) << ','
         << format_double(s.q1) << ',' << format_double(s.q3) << ',' << format_double(s.max) << '\n';
  }
  return os.str();
}

TimingTable timing_bench(const std::vector<std::pair<std::string, TimedTask>>& methods, std::size_t windows,
                         int repetitions) {
  TimingTable table;
  if (repetitions <= 0 || windows == 0) return table;
  using clock = std::chrono::steady_clock;
  for (const auto& [name, task] : methods) {
    task(0);  // warm-up
    std::vector<double> ms;
    for (int rep = 0; rep < repetitions; ++rep)
      for (std::size_t w = 0; w < windows; ++w) {
        const auto t0 = clock::now();
        task(w);
        ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
      }
    TimingRow row;
    row.method = name;
    row.samples = ms.size();
    double sum = 0.0;
    for (double v : ms) sum += v;
    row.mean_ms = sum / static_cast<double>(ms.size());
    row.p50_ms = quantile(ms, 0.5);
    row.p95_ms = quantile(ms, 0.95);
    table.rows.push_back(row);
  }
  auto find = [&](const std::string& n) -> const TimingRow* {
    for (const auto& r : table.rows)
      if (r.method == n) return &r;
    return nullptr;
  };
  const auto* fes = find("fes");
  const auto* exact = find("exact");
  if (fes && exact && fes->mean_ms > 0.0) table.fes_vs_exact = exact->mean_ms / fes->mean_ms;
  return table;
}

std::string timing_csv(const TimingTable& t) {
  std::ostringstream os;
  os << "method,samples,mean_ms,p50_ms,p95_ms\n";
  for (const auto& r : t.rows)
    os << r.method << ',' << r.samples << ',' << nn::format_double(r.mean_ms) << ',' << nn::format_double(r.p50_ms)
       << ',' << nn::format_double(r.p95_ms) << '\n';
  return os.str();
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::ostringstream os;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << row[c];
      if (c + 1 < row.size()) os << std::string(width[c] - row[c].size() + 2, ' ');
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fes::eval
