#include "fes/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fes/data/appliances.hpp"
#include "fes/data/synthetic.hpp"
#include "fes/errors.hpp"
#include "fes/eval/baselines.hpp"
#include "fes/nn/checkpoint.hpp"
#include "fes/sched/constraints.hpp"
#include "fes/sched/exact_solver.hpp"
#include "fes/sched/ga_solver.hpp"

namespace fes::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("write failed for " + path.string());
}

void prepare_out_dir(const RunConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  write_text(out_dir / "resolved_config.json", config_to_json(config));
}

// Re-throws a module error with the pipeline stage prepended, keeping its type.
template <typename F>
auto in_stage(const std::string& stage, F&& f) {
  auto tag = [&stage](const std::exception& e) { return stage + ": " + e.what(); };
  try {
    return f();
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(e.device(), tag(e));
  } catch (const TrainingError& e) {
    throw TrainingError(tag(e));
  } catch (const DataError& e) {
    throw DataError(tag(e));
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e));
  } catch (const ShapeError& e) {
    throw ShapeError(tag(e));
  } catch (const ParameterError& e) {
    throw ParameterError(tag(e));
  }
}

std::string loss_csv(const std::vector<double>& history, const char* column) {
  std::ostringstream os;
  os << "epoch," << column << '\n';
  for (std::size_t e = 0; e < history.size(); ++e) os << e + 1 << ',' << nn::format_double(history[e]) << '\n';
  return os.str();
}

std::string day_label(const rtpnn::ForecastInput& in) { return format_timestamp(in.timestamps.front()).substr(0, 10); }

struct Models {
  rtpnn::RtpnnModel forecaster;
  scheduling::FesModel fes;
};

rtpnn::RtpnnModel load_forecaster(const fs::path& dir) {
  const auto path = dir / "rtpnn.ckpt";
  if (!fs::exists(path))
    throw DataError("no trained forecaster at " + path.string() + "; run `fes train` with this config first");
  return rtpnn::RtpnnModel::from_checkpoint(nn::load_checkpoint(path));
}

Models load_models(const fs::path& dir) {
  auto forecaster = load_forecaster(dir);
  const auto path = dir / "fes.ckpt";
  if (!fs::exists(path))
    throw DataError("no trained scheduling layer at " + path.string() + "; run `fes train` with this config first");
  auto fes = scheduling::FesModel::from_checkpoint(nn::load_checkpoint(path), forecaster);
  return {std::move(forecaster), std::move(fes)};
}

void check_devices_match(const scheduling::FesModel& model, const std::vector<DeviceSpec>& devices) {
  bool same = model.device_names().size() == devices.size();
  for (std::size_t n = 0; same && n < devices.size(); ++n) same = model.device_names()[n] == devices[n].name;
  if (!same) throw ConfigError("device list differs from the one the scheduling layer was trained on");
}

data::WindowSet windows_for(const RunConfig& config) {
  return in_stage("windows", [&] { return data::build_windows(load_table(config), config.split, config.lags); });
}

std::size_t pick_day(const std::vector<rtpnn::TrainingWindow>& test, const std::string& day) {
  if (day.empty()) return 0;
  if (std::all_of(day.begin(), day.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const auto idx = std::stoul(day);
    if (idx >= test.size())
      throw UsageError("--day " + day + " is out of range; the test split has " + std::to_string(test.size()) +
                       " days (0.." + std::to_string(test.size() - 1) + ")");
    return idx;
  }
  for (std::size_t i = 0; i < test.size(); ++i)
    if (day_label(test[i].input) == day) return i;
  throw UsageError("--day " + day + " is not a test day (expected an index or a YYYY-MM-DD date in the test split)");
}

std::string metrics_row(const std::string& split, const std::string& model, const eval::ForecastMetrics& m) {
  using nn::format_double;
  std::ostringstream os;
  os << split << ',' << model << ',' << format_double(m.mse) << ',' << format_double(m.mae) << ','
     << (m.mape ? format_double(*m.mape) : std::string()) << ',' << format_double(m.smape) << ',' << m.count << ','
     << m.mape_skipped << '\n';
  return os.str();
}

// Console tables only; the CSV files keep full precision.
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Eigen::VectorXd concat(const std::vector<Eigen::VectorXd>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "fes") return Method::Fes;
  if (name == "exact") return Method::Exact;
  if (name == "ga") return Method::Ga;
  throw UsageError("unknown method '" + name + "'; valid methods: fes, exact, ga");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Fes: return "fes";
    case Method::Exact: return "exact";
    case Method::Ga: return "ga";
  }
  return "?";
}

data::SeriesTable load_table(const RunConfig& config) {
  data::SeriesTable table;
  if (config.data.source == "synthetic") {
    table = data::synthetic_series(config.data.synthetic);
  } else {
    if (config.data.generation_csv.empty() || config.data.weather_csv.empty())
      throw ConfigError("data.generation_csv and data.weather_csv are required when data.source is 'csv'");
    table = data::ingest(config.data.generation_csv, config.data.weather_csv);
  }
  if (!config.data.features.empty()) table = data::select_features(table, config.data.features);
  return table;
}

std::vector<DeviceSpec> load_device_list(const RunConfig& config) {
  return config.devices_file.empty() ? data::default_devices() : data::load_devices(config.devices_file);
}

ScenarioWindow window_scenario(const RunConfig& config, const std::vector<DeviceSpec>& devices,
                               const Eigen::VectorXd& generation, double battery_fraction, std::int64_t start_hour) {
  data::ScenarioParams p = config.scenario;
  p.battery_fraction = battery_fraction;
  return data::make_scenario(devices, generation, p, start_hour);
}

fs::path checkpoint_dir(const RunConfig& config, const fs::path& out_dir) {
  return config.checkpoint_dir.empty() ? out_dir : config.checkpoint_dir;
}

IngestSummary cmd_ingest(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto table = in_stage("ingest", [&] { return load_table(config); });
  prepare_out_dir(config, out_dir);
  write_text(out_dir / "generation.csv", data::generation_csv(table));
  write_text(out_dir / "weather.csv", data::weather_csv(table));
  IngestSummary s;
  s.report = table.report;
  try {
    s.windows = data::all_windows(table, config.split.slots, config.lags).size();
  } catch (const DataError& e) {
    log << "warning: " << e.what() << '\n';
  }
  ojson j{{"generation_rows", s.report.generation_rows},
          {"weather_rows", s.report.weather_rows},
          {"output_rows", s.report.output_rows},
          {"imputed_rows", s.report.imputed_rows},
          {"features", table.feature_names},
          {"windows", s.windows}};
  write_text(out_dir / "ingest_report.json", j.dump(2) + "\n");
  log << "ingest: " << s.report.generation_rows << " generation rows, " << s.report.weather_rows
      << " weather rows -> " << s.report.output_rows << " joined rows (" << s.report.imputed_rows << " imputed), "
      << s.windows << " day windows\n";
  return s;
}

TrainSummary cmd_train(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto windows = windows_for(config);
  const auto devices = in_stage("devices", [&] { return load_device_list(config); });
  prepare_out_dir(config, out_dir);
  TrainSummary summary;
  summary.train_windows = windows.train.size();

  rtpnn::RtpnnModel forecaster(static_cast<int>(windows.train.front().input.series()) - 1, config.rtpnn);
  log << "stage 1: " << windows.train.size() << " windows, " << config.stage1.epochs << " epochs\n";
  const auto s1 = in_stage("stage 1", [&] { return rtpnn::stage1_train(forecaster, windows.train, config.stage1); });
  write_text(out_dir / "stage1_loss.csv", loss_csv(s1.loss_history, "mse"));

  std::vector<scheduling::Stage2Window> labelled;
  in_stage("stage 2 labels", [&] {
    for (const auto& w : windows.train) {
      const auto forecast = forecaster.forecast_window(w.input);
      auto sc = window_scenario(config, devices, forecast, config.scenario.battery_fraction, w.input.timestamps.front());
      auto sol = solve_exact(sc);
      if (!sol) {
        ++summary.skipped;
        log << "warning: stage 2: " << day_label(w.input)
            << " has no feasible schedule under its forecast generation; day skipped\n";
        continue;
      }
      labelled.push_back(scheduling::Stage2Window{std::move(sc), std::move(sol->schedule)});
    }
    return 0;
  });
  summary.labelled = labelled.size();
  if (labelled.empty()) throw TrainingError("stage 2: no training day has a feasible schedule; nothing to learn");

  std::vector<std::string> names;
  for (const auto& d : devices) names.push_back(d.name);
  scheduling::FesModel fes(forecaster, names, config.scenario.slots);
  log << "stage 2: " << labelled.size() << " labelled days (" << summary.skipped << " skipped), "
      << config.stage2.epochs << " epochs\n";
  const auto s2 = in_stage("stage 2", [&] { return scheduling::stage2_train(fes, labelled, config.stage2); });
  write_text(out_dir / "stage2_loss.csv", loss_csv(s2.loss_history, "cce"));

  const auto ckdir = checkpoint_dir(config, out_dir);
  fs::create_directories(ckdir);
  nn::save_checkpoint(ckdir / "rtpnn.ckpt", forecaster.to_checkpoint());
  nn::save_checkpoint(ckdir / "fes.ckpt", fes.to_checkpoint());
  summary.rtpnn_checksum = nn::checksum(forecaster.params());
  summary.fes_checksum = nn::checksum(fes.head_params());
  ojson j{{"train_windows", summary.train_windows},
          {"labelled_days", summary.labelled},
          {"skipped_days", summary.skipped},
          {"stage1_final_mse", s1.loss_history.empty() ? 0.0 : s1.loss_history.back()},
          {"stage2_final_cce", s2.loss_history.empty() ? 0.0 : s2.loss_history.back()},
          {"rtpnn_checksum", summary.rtpnn_checksum},
          {"fes_checksum", summary.fes_checksum}};
  write_text(out_dir / "train_summary.json", j.dump(2) + "\n");
  log << "train: wrote " << (ckdir / "rtpnn.ckpt").string() << " and " << (ckdir / "fes.ckpt").string() << '\n';
  return summary;
}

ScheduleOutcome cmd_schedule(const RunConfig& config, const fs::path& out_dir, Method method, const std::string& day,
                             std::ostream& log) {
  const auto devices = in_stage("devices", [&] { return load_device_list(config); });
  const auto ckdir = checkpoint_dir(config, out_dir);
  ScheduleOutcome out;
  std::string label = "fixed";
  std::optional<rtpnn::ForecastInput> input;
  Eigen::VectorXd generation;

  if (config.scenario_generation) {
    generation = Eigen::Map<const Eigen::VectorXd>(config.scenario_generation->data(),
                                                   static_cast<Eigen::Index>(config.scenario_generation->size()));
  } else {
    const auto windows = windows_for(config);
    const auto idx = pick_day(windows.test, day);
    input = windows.test[idx].input;
    label = day_label(*input);
    generation = load_forecaster(ckdir).forecast_window(*input);
  }
  out.scenario = window_scenario(config, devices, generation, config.scenario.battery_fraction,
                                 input ? input->timestamps.front() : 0);
  prepare_out_dir(config, out_dir);

  std::optional<scheduling::SoftSchedule> soft;
  switch (method) {
    case Method::Fes: {
      const auto models = load_models(ckdir);
      check_devices_match(models.fes, devices);
      if (input) {
        auto inf = scheduling::infer(models.fes, *input, out.scenario);
        out.schedule = std::move(inf.schedule);
        soft = std::move(inf.soft);
      } else {
        soft = scheduling::soft_schedule(models.fes, generation, out.scenario);
        out.schedule = scheduling::decode(*soft, out.scenario);
      }
      break;
    }
    case Method::Exact: {
      auto sol = solve_exact(out.scenario);
      if (!sol) throw InfeasibleError(SIZE_MAX, "exact: no feasible schedule exists for day " + label);
      out.schedule = std::move(sol->schedule);
      break;
    }
    case Method::Ga: {
      GaConfig gc = config.ga;
      auto res = ga_solve(out.scenario, gc);
      write_text(out_dir / "ga_history.csv", ga_history_csv(res));
      out.schedule = std::move(res.schedule);
      break;
    }
  }
  const auto violations = validate(out.schedule, out.scenario);
  if (!violations.empty())
    throw InfeasibleError(violations.front().device, to_string(method) + ": schedule violates the constraints");
  out.objective = objective(out.schedule, out.scenario);

  write_text(out_dir / "schedule.csv", scheduling::schedule_csv(out.schedule, out.scenario));
  if (input) write_text(out_dir / "forecast.csv", rtpnn::forecast_csv(*input, generation));
  if (soft) write_text(out_dir / "soft_schedule.csv", scheduling::soft_schedule_csv(*soft, out.scenario));
  ojson j{{"method", to_string(method)}, {"day", label}, {"objective", out.objective}, {"violations", 0}};
  write_text(out_dir / "schedule_summary.json", j.dump(2) + "\n");
  log << "schedule: " << to_string(method) << " on " << label << ", objective " << nn::format_double(out.objective)
      << '\n';
  return out;
}

EvaluateSummary cmd_evaluate(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto windows = windows_for(config);
  const auto devices = in_stage("devices", [&] { return load_device_list(config); });
  const auto models = load_models(checkpoint_dir(config, out_dir));
  check_devices_match(models.fes, devices);
  prepare_out_dir(config, out_dir);
  EvaluateSummary summary;
  std::ostringstream report;

  // Forecasting
  std::vector<std::pair<std::string, std::function<Eigen::VectorXd(const rtpnn::ForecastInput&)>>> models_fc;
  models_fc.emplace_back("rtpnn", [&](const rtpnn::ForecastInput& in) { return models.forecaster.forecast_window(in); });
  std::optional<eval::LinearBaseline> linear;
  std::optional<eval::MlpBaseline> mlp;
  if (config.eval.baselines) {
    linear = eval::LinearBaseline::fit(windows.train);
    mlp = eval::MlpBaseline::fit(windows.train, config.mlp);
    models_fc.emplace_back("naive", [](const rtpnn::ForecastInput& in) { return eval::naive_forecast(in); });
    models_fc.emplace_back("linear", [&](const rtpnn::ForecastInput& in) { return linear->forecast(in); });
    models_fc.emplace_back("mlp", [&](const rtpnn::ForecastInput& in) { return mlp->forecast(in); });
  }
  std::string metrics = "split,model,mse,mae,mape_pct,smape_pct,count,mape_skipped\n";
  std::vector<std::vector<std::string>> table{{"split", "model", "MSE", "MAE", "MAPE%", "SMAPE%", "n"}};
  for (const auto& [split, ws] : {std::pair{"train", &windows.train}, std::pair{"test", &windows.test}}) {
    std::vector<Eigen::VectorXd> actual;
    for (const auto& w : *ws) actual.push_back(w.target);
    const auto a = concat(actual);
    for (const auto& [name, fn] : models_fc) {
      std::vector<Eigen::VectorXd> parts;
      for (const auto& w : *ws) parts.push_back(fn(w.input));
      const auto m = eval::forecast_metrics(a, concat(parts), config.eval.exclude_nights);
      metrics += metrics_row(split, name, m);
      table.push_back({split, name, brief(m.mse), brief(m.mae), m.mape ? brief(*m.mape) : "n/a", brief(m.smape),
                       std::to_string(m.count)});
      if (std::string(split) == "test") summary.test_metrics.emplace_back(name, m);
    }
  }
  write_text(out_dir / "forecast_metrics.csv", metrics);
  report << "Forecasting (" << (config.eval.exclude_nights ? "nights excluded" : "all slots")
         << "; MAPE skips zero actuals)\n"
         << eval::format_table(table) << '\n';

  std::string forecasts = "timestamp,gen_forecast_kw\n";
  std::vector<Eigen::VectorXd> fc(windows.test.size());
  for (std::size_t d = 0; d < windows.test.size(); ++d) {
    fc[d] = models.forecaster.forecast_window(windows.test[d].input);
    const auto csv = rtpnn::forecast_csv(windows.test[d].input, fc[d]);
    forecasts += csv.substr(csv.find('\n') + 1);
  }
  write_text(out_dir / "forecast.csv", forecasts);

  // Scheduling cost gaps
  std::string gap_summary = "battery_fraction,method,unit,mean,median,q1,q3,max\n";
  std::vector<std::vector<std::string>> gap_table{{"B/Bmax", "method", "mean%", "median%", "q3%", "max%", "mean abs"}};
  for (double frac : config.eval.battery_sweep) {
    std::vector<std::string> days;
    std::vector<double> exact, fes_obj, ga_obj;
    for (std::size_t d = 0; d < windows.test.size(); ++d) {
      const auto& in = windows.test[d].input;
      const auto sc = window_scenario(config, devices, fc[d], frac, in.timestamps.front());
      const auto sol = solve_exact(sc);
      if (!sol) {
        ++summary.skipped_days;
        log << "warning: evaluate: " << day_label(in) << " (B=" << frac
            << " B_max) has no feasible schedule under its forecast; day skipped\n";
        continue;
      }
      double fes_value = 0.0, ga_value = 0.0;
      try {
        const auto inf = scheduling::infer(models.fes, in, sc);
        fes_value = objective(inf.schedule, sc);
        GaConfig gc = config.ga;
        gc.seed = fork_seed(config.ga.seed, std::to_string(d));
        ga_value = ga_solve(sc, gc).objective;
      } catch (const InfeasibleError& e) {
        ++summary.skipped_days;
        log << "warning: evaluate: " << day_label(in) << " (B=" << frac << " B_max): " << e.what()
            << "; day skipped\n";
        continue;
      }
      days.push_back(day_label(in));
      exact.push_back(sol->objective);
      fes_obj.push_back(fes_value);
      ga_obj.push_back(ga_value);
    }
    auto gaps = eval::cost_gap(days, exact, {{"fes", fes_obj}, {"ga", ga_obj}});
    std::ostringstream name;
    name << "cost_gap_b" << static_cast<int>(std::lround(frac * 100.0)) << ".csv";
    write_text(out_dir / name.str(), eval::boxplot_csv(gaps));
    const auto per = eval::gap_summary_csv(gaps);
    std::istringstream lines(per);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) gap_summary += nn::format_double(frac) + "," + line + "\n";
    for (const auto& [m, g] : gaps.methods)
      gap_table.push_back(
          {brief(frac), m, brief(g.pct.mean), brief(g.pct.median), brief(g.pct.q3), brief(g.pct.max), brief(g.abs.mean)});
    summary.gaps.emplace_back(frac, std::move(gaps));
  }
  write_text(out_dir / "gap_summary.csv", gap_summary);
  report << "Scheduling cost gap vs exact (" << summary.skipped_days << " day(s) skipped)\n"
         << eval::format_table(gap_table);

  if (config.eval.timing) {
    const auto timing = cmd_bench(config, out_dir, log);
    report << '\n' << "Timing (ms per window)\n" << eval::timing_csv(timing);
  }
  write_text(out_dir / "evaluate_report.txt", report.str());
  log << report.str();
  return summary;
}

eval::TimingTable cmd_bench(const RunConfig& config, const fs::path& out_dir, std::ostream& log,
                            std::size_t max_windows) {
  const auto windows = windows_for(config);
  const auto devices = in_stage("devices", [&] { return load_device_list(config); });
  const auto models = load_models(checkpoint_dir(config, out_dir));
  check_devices_match(models.fes, devices);
  prepare_out_dir(config, out_dir);

  const std::size_t n = std::min(max_windows, windows.test.size());
  const double frac = config.scenario.battery_fraction;
  auto scenario_of = [&](std::size_t w, const Eigen::VectorXd& g) {
    return window_scenario(config, devices, g, frac, windows.test[w].input.timestamps.front());
  };
  // Every method pays for the forecast; exact and GA then plan on it.
  std::vector<std::pair<std::string, eval::TimedTask>> methods;
  methods.emplace_back("fes", [&](std::size_t w) {
    const auto& in = windows.test[w].input;
    try {
      (void)scheduling::infer(models.fes, in, scenario_of(w, Eigen::VectorXd::Zero(in.slots())));
    } catch (const InfeasibleError&) {
    }
  });
  methods.emplace_back("exact", [&](std::size_t w) {
    (void)solve_exact(scenario_of(w, models.forecaster.forecast_window(windows.test[w].input)));
  });
  methods.emplace_back("ga", [&](std::size_t w) {
    try {
      GaConfig gc = config.ga;
      gc.seed = fork_seed(config.ga.seed, std::to_string(w));
      (void)ga_solve(scenario_of(w, models.forecaster.forecast_window(windows.test[w].input)), gc);
    } catch (const InfeasibleError&) {
    }
  });
  const auto table = eval::timing_bench(methods, n, config.eval.repetitions);
  write_text(out_dir / "timing.csv", eval::timing_csv(table));
  std::vector<std::vector<std::string>> rows{{"method", "samples", "mean ms", "p50 ms", "p95 ms"}};
  for (const auto& r : table.rows)
    rows.push_back({r.method, std::to_string(r.samples), brief(r.mean_ms), brief(r.p50_ms), brief(r.p95_ms)});
  log << eval::format_table(rows);
  if (table.fes_vs_exact) log << "fes is " << brief(*table.fes_vs_exact) << "x faster than exact\n";
  return table;
}

}  // namespace fes::cli
