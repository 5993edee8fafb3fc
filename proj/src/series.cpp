#include "fes/data/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "fes/errors.hpp"
#include "fes/nn/checkpoint.hpp"

namespace fes::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct RawTable {
  std::vector<std::string> columns;  // value columns (timestamp excluded)
  std::vector<EpochHours> times;
  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<bool> numeric;  // per column: every non-empty cell parsed
};

RawTable read_csv(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw DataError(name + ": empty file");
  auto header = split_line(line);
  if (header.empty() || header[0] != "timestamp")
    throw DataError(name + ": missing column 'timestamp' (first header cell is '" +
                    (header.empty() ? std::string() : header[0]) + "')");
  RawTable t;
  t.columns.assign(header.begin() + 1, header.end());
  t.numeric.assign(t.columns.size(), true);
  std::size_t lineno = 1;
  std::vector<std::pair<EpochHours, std::vector<std::optional<double>>>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    auto ts = parse_timestamp(cells[0]);
    if (!ts) throw DataError(name + ": unparseable timestamp '" + cells[0] + "' in column 'timestamp', line " + std::to_string(lineno));
    std::vector<std::optional<double>> vals(t.columns.size());
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c + 1 >= cells.size() || cells[c + 1].empty()) continue;
      vals[c] = parse_number(cells[c + 1]);
      if (!vals[c]) t.numeric[c] = false;
    }
    rows.emplace_back(*ts, std::move(vals));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw DataError(name + ": duplicate timestamp " + format_timestamp(rows[i].first));
  for (auto& [ts, vals] : rows) {
    t.times.push_back(ts);
    t.rows.push_back(std::move(vals));
  }
  if (t.times.empty()) throw DataError(name + ": no data rows");
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Value of `col` at `hour` with forward fill; sets `filled` when imputed.
class Cursor {
 public:
  explicit Cursor(const RawTable& t) : t_(t), last_(t.columns.size()) {}

  void advance_to(EpochHours hour) {
    while (pos_ < t_.times.size() && t_.times[pos_] <= hour) {
      for (std::size_t c = 0; c < last_.size(); ++c)
        if (t_.rows[pos_][c]) last_[c] = t_.rows[pos_][c];
      exact_ = t_.times[pos_] == hour ? std::optional<std::size_t>(pos_) : std::nullopt;
      ++pos_;
    }
    if (pos_ > 0 && t_.times[pos_ - 1] != hour) exact_.reset();
  }

  std::optional<double> value(std::size_t col, bool& filled) const {
    if (!exact_ || !t_.rows[*exact_][col]) filled = true;
    return last_[col];
  }

 private:
  const RawTable& t_;
  std::size_t pos_ = 0;
  std::vector<std::optional<double>> last_;
  std::optional<std::size_t> exact_;
};

}  // namespace

SeriesTable ingest_text(const std::string& generation_csv, const std::string& weather_csv, const std::string& gen_name,
                        const std::string& weather_name) {
  const RawTable gen = read_csv(generation_csv, gen_name);
  const RawTable wx = read_csv(weather_csv, weather_name);
  const auto gen_col = std::find(gen.columns.begin(), gen.columns.end(), "gen_kw");
  if (gen_col == gen.columns.end()) throw DataError(gen_name + ": missing column 'gen_kw'");
  const auto g_idx = static_cast<std::size_t>(gen_col - gen.columns.begin());
  if (!gen.numeric[g_idx]) throw DataError(gen_name + ": non-numeric values in column 'gen_kw'");

  std::vector<std::size_t> feat_cols;
  SeriesTable table;
  for (std::size_t c = 0; c < wx.columns.size(); ++c) {
    if (!wx.numeric[c]) continue;
    feat_cols.push_back(c);
    table.feature_names.push_back(wx.columns[c]);
  }

  const EpochHours first = std::max(gen.times.front(), wx.times.front());
  const EpochHours last = std::min(gen.times.back(), wx.times.back());
  if (first > last)
    throw DataError("empty join: " + gen_name + " covers " + format_timestamp(gen.times.front()) + " .. " +
                    format_timestamp(gen.times.back()) + ", " + weather_name + " covers " +
                    format_timestamp(wx.times.front()) + " .. " + format_timestamp(wx.times.back()));

  const auto rows = static_cast<Eigen::Index>(last - first + 1);
  table.generation.resize(rows);
  table.features.resize(rows, static_cast<Eigen::Index>(feat_cols.size()));
  Cursor gc(gen), wc(wx);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const EpochHours hour = first + r;
    gc.advance_to(hour);
    wc.advance_to(hour);
    bool filled = false;
    const auto g = gc.value(g_idx, filled);
    if (!g) throw DataError(gen_name + ": no 'gen_kw' value at or before " + format_timestamp(hour));
    table.generation(r) = *g;
    for (std::size_t k = 0; k < feat_cols.size(); ++k) {
      const auto v = wc.value(feat_cols[k], filled);
      if (!v)
        throw DataError(weather_name + ": no value for column '" + wx.columns[feat_cols[k]] + "' at or before " +
                        format_timestamp(hour));
      table.features(r, static_cast<Eigen::Index>(k)) = *v;
    }
    table.timestamps.push_back(hour);
    table.imputed.push_back(filled);
  }
  table.report.generation_rows = gen.times.size();
  table.report.weather_rows = wx.times.size();
  table.report.output_rows = table.rows();
  table.report.imputed_rows = static_cast<std::size_t>(std::count(table.imputed.begin(), table.imputed.end(), true));
  return table;
}

SeriesTable ingest(const std::filesystem::path& generation_csv, const std::filesystem::path& weather_csv) {
  return ingest_text(read_file(generation_csv), read_file(weather_csv), generation_csv.string(),
                     weather_csv.string());
}

SeriesTable select_features(const SeriesTable& table, const std::vector<std::string>& names) {
  SeriesTable out = table;
  out.feature_names = names;
  out.features.resize(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto it = std::find(table.feature_names.begin(), table.feature_names.end(), names[k]);
    if (it == table.feature_names.end()) throw DataError("weather data has no feature column '" + names[k] + "'");
    out.features.col(static_cast<Eigen::Index>(k)) =
        table.features.col(static_cast<Eigen::Index>(it - table.feature_names.begin()));
  }
  return out;
}

std::string generation_csv(const SeriesTable& table) {
  std::ostringstream os;
  os << "timestamp,gen_kw\n";
  for (std::size_t r = 0; r < table.rows(); ++r)
    os << format_timestamp(table.timestamps[r]) << ',' << nn::format_double(table.generation(static_cast<Eigen::Index>(r)))
       << '\n';
  return os.str();
}

std::string weather_csv(const SeriesTable& table) {
  std::ostringstream os;
  os << "timestamp";
  for (const auto& n : table.feature_names) os << ',' << n;
  os << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    os << format_timestamp(table.timestamps[r]);
    for (Eigen::Index f = 0; f < table.features.cols(); ++f)
      os << ',' << nn::format_double(table.features(static_cast<Eigen::Index>(r), f));
    os << '\n';
  }
  return os.str();
}

std::vector<rtpnn::TrainingWindow> all_windows(const SeriesTable& table, int slots, const LagSpec& lags) {
  if (slots < 1 || slots > 24) throw ParameterError("windows: hourly slots require 1 <= S <= 24");
  if (lags.generation_hours < 1 || lags.feature_hours < 1) throw ParameterError("windows: lags must be >= 1 hour");
  const auto history = static_cast<std::size_t>(2 * std::max(lags.generation_hours, lags.feature_hours));
  const std::size_t n = table.rows();
  std::size_t first = history;
  while (first < n && hour_of_day(table.timestamps[first]) != 0) ++first;
  if (first + static_cast<std::size_t>(slots) > n)
    throw DataError("insufficient history: one window needs " + std::to_string(history) +
                    " lag rows plus a midnight-aligned day of " + std::to_string(slots) + " slots (at least " +
                    std::to_string(first + static_cast<std::size_t>(slots)) + " rows here), table has " +
                    std::to_string(n) + " rows");
  const Eigen::Index series = table.features.cols() + 1;
  std::vector<rtpnn::TrainingWindow> out;
  for (std::size_t start = first; start + static_cast<std::size_t>(slots) <= n; start += 24) {
    rtpnn::TrainingWindow w;
    w.input.older.resize(slots, series);
    w.input.newer.resize(slots, series);
    w.target.resize(slots);
    for (int s = 0; s < slots; ++s) {
      const auto r = static_cast<Eigen::Index>(start) + s;
      w.input.timestamps.push_back(table.timestamps[static_cast<std::size_t>(r)]);
      w.target(s) = table.generation(r);
      w.input.older(s, 0) = table.generation(r - 2 * lags.generation_hours);
      w.input.newer(s, 0) = table.generation(r - lags.generation_hours);
      for (Eigen::Index f = 0; f + 1 < series; ++f) {
        w.input.older(s, f + 1) = table.features(r - 2 * lags.feature_hours, f);
        w.input.newer(s, f + 1) = table.features(r - lags.feature_hours, f);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

WindowSet build_windows(const SeriesTable& table, const SplitSpec& split, const LagSpec& lags) {
  if (split.train_days < 1 || split.test_days < 0) throw ParameterError("split: train_days >= 1 and test_days >= 0");
  auto windows = all_windows(table, split.slots, lags);
  const int gap =
      split.purge_gap ? (2 * std::max(lags.generation_hours, lags.feature_hours) + 23) / 24 : 0;
  const auto avail = static_cast<int>(windows.size());
  const int test = split.test_days > 0 ? split.test_days : avail - split.train_days - gap;
  if (test < 1 || split.train_days + gap + test > avail)
    throw DataError("split needs " + std::to_string(split.train_days) + " train + " + std::to_string(gap) + " gap + " +
                    std::to_string(std::max(test, 1)) + " test windows, data provides " + std::to_string(avail));
  WindowSet out;
  for (int i = 0; i < split.train_days; ++i) out.train.push_back(std::move(windows[static_cast<std::size_t>(i)]));
  for (int i = 0; i < test; ++i)
    out.test.push_back(std::move(windows[static_cast<std::size_t>(split.train_days + gap + i)]));
  return out;
}

}  // namespace fes::data
