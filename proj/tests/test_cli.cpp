#include <doctest.h>

#include <sstream>

#include "fes/cli/commands.hpp"
#include "fes/cli/config.hpp"
#include "fes/errors.hpp"
#include "fes/sched/exact_solver.hpp"
#include "support.hpp"

using namespace fes;
using namespace fes::cli;

namespace {

// small synthetic run that trains in well under a second
RunConfig tiny_config() {
  return parse_config(R"({
    "data": {"source": "synthetic", "synthetic": {"days": 16}},
    "split": {"train_days": 8, "test_days": 4},
    "stage1": {"epochs": 5},
    "stage2": {"epochs": 2},
    "ga": {"initial_samples": 200, "population": 20, "offspring": 20, "generations": 10}
  })");
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("fes") == Method::Fes);
  CHECK(parse_method("exact") == Method::Exact);
  CHECK(to_string(Method::Ga) == "ga");
  CHECK_THROWS_WITH_AS(parse_method("milp"), doctest::Contains("fes, exact, ga"), UsageError);
}

TEST_CASE("config defaults and strictness") {
  const auto c = parse_config("{}");
  CHECK(c.stage1.epochs == 40);
  CHECK(c.stage1.lr == 1e-3);
  CHECK(c.stage1.batch_size == 24);
  CHECK(c.stage2.epochs == 20);
  CHECK(c.stage2.batch_size == 1);
  CHECK(c.scenario.battery_max_kwh == 40.5);
  CHECK_THROWS_AS(parse_config(R"({"stage1": {"epoch": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"slots": 12}})"), ConfigError);
}

TEST_CASE("resolved config round-trips") {
  auto c = tiny_config();
  apply_seed(c, 42);
  const auto text = config_to_json(c);
  CHECK(config_to_json(parse_config(text)) == text);
}

TEST_CASE("seeds fork per component") {
  CHECK(fork_seed(1, "ga") == fork_seed(1, "ga"));
  CHECK(fork_seed(1, "ga") != fork_seed(1, "stage1"));
  CHECK(fork_seed(1, "ga") != fork_seed(2, "ga"));
}

TEST_CASE("schedule exact on a fixed two-device day") {
  const auto dir = test::scratch_dir("cli_exact");
  test::spit(dir / "devices.json", R"([
    {"name": "a", "power_kw": 1, "duration_slots": 1, "desired_start": 1, "sigma": 1},
    {"name": "b", "power_kw": 1, "duration_slots": 1, "desired_start": 1, "sigma": 1}])");
  auto c = parse_config(R"({
    "split": {"slots": 4},
    "scenario": {"slots": 4, "horizon_hours": 4, "inverter_kw": 1, "battery_max_kwh": 10,
                 "battery_fraction": 0, "generation": [1, 1, 0, 0]}})");
  c.devices_file = dir / "devices.json";
  std::ostringstream log;
  const auto out = cmd_schedule(c, dir / "out", Method::Exact, "0", log);
  CHECK(out.schedule.starts() == std::vector<int>{0, 1});
  CHECK(out.objective == solve_exact(out.scenario)->objective);
  const auto csv = test::slurp(dir / "out" / "schedule.csv");
  CHECK(csv.find("1,a,1,") != std::string::npos);
  CHECK(csv.find("2,b,2,") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "out" / "resolved_config.json"));
}

TEST_CASE("fes without checkpoints asks for training") {
  const auto dir = test::scratch_dir("cli_nockpt");
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(cmd_schedule(tiny_config(), dir, Method::Fes, "0", log), doctest::Contains("fes train"),
                       DataError);
  CHECK_THROWS_WITH_AS(cmd_evaluate(tiny_config(), dir, log), doctest::Contains("fes train"), DataError);
}

TEST_CASE("missing weather file is a data error") {
  auto c = parse_config(R"({"data": {"generation_csv": "/nonexistent/g.csv", "weather_csv": "/nonexistent/w.csv"}})");
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_ingest(c, test::scratch_dir("cli_ingest"), log), DataError);
}

TEST_CASE("train, schedule and evaluate on a tiny synthetic set") {
  const auto dir = test::scratch_dir("cli_pipeline");
  auto c = tiny_config();
  c.checkpoint_dir = dir;
  std::ostringstream log;
  const auto ts = cmd_train(c, dir, log);
  CHECK(ts.train_windows == 8);
  CHECK(ts.labelled + ts.skipped == 8);
  for (const char* f : {"rtpnn.ckpt", "fes.ckpt", "stage1_loss.csv", "stage2_loss.csv", "train_summary.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(test::slurp(dir / "stage1_loss.csv").rfind("epoch,mse\n", 0) == 0);

  const auto a = cmd_schedule(c, dir / "s1", Method::Fes, "1", log);
  const auto b = cmd_schedule(c, dir / "s2", Method::Fes, "1", log);
  CHECK(a.schedule == b.schedule);
  CHECK(test::slurp(dir / "s1" / "schedule.csv") == test::slurp(dir / "s2" / "schedule.csv"));
  CHECK(test::slurp(dir / "s1" / "forecast.csv").rfind("timestamp,gen_forecast_kw\n", 0) == 0);
  CHECK_THROWS_AS(cmd_schedule(c, dir / "s3", Method::Fes, "99", log), UsageError);

  const auto ev = cmd_evaluate(c, dir, log);
  for (const auto& [model, m] : ev.test_metrics) CHECK((m.smape >= 0.0 && m.smape <= 200.0));
  for (const auto& [frac, report] : ev.gaps)
    for (const auto& [method, g] : report.methods)
      for (double x : g.gap_abs) CHECK(x >= -1e-12);
  CHECK(std::filesystem::exists(dir / "cost_gap_b100.csv"));
  CHECK(std::filesystem::exists(dir / "forecast_metrics.csv"));

  auto nights = c;
  nights.eval.exclude_nights = true;
  const auto en = cmd_evaluate(nights, dir / "nights", log);
  CHECK(en.test_metrics.front().second.count < ev.test_metrics.front().second.count);
}

TEST_CASE("over-subscribed days are skipped during labelling") {
  const auto dir = test::scratch_dir("cli_skip");
  // a 6 kW load running all day needs 144 kWh: the full battery plus a bright
  // forecast day covers it, a dull one does not
  test::spit(dir / "devices.json",
             R"([{"name": "kiln", "power_kw": 6, "duration_slots": 24, "desired_start": 1, "sigma": 1}])");
  auto c = tiny_config();
  c.devices_file = dir / "devices.json";
  c.stage1.epochs = 60;
  c.stage1.lr = 0.01;
  std::ostringstream log;
  const auto ts = cmd_train(c, dir, log);
  CHECK(ts.skipped > 0);
  CHECK(ts.labelled > 0);
  CHECK(ts.labelled + ts.skipped == ts.train_windows);
  CHECK(log.str().find("day skipped") != std::string::npos);
}
