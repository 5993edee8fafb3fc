#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "fes/cli/commands.hpp"
#include "fes/cli/config.hpp"
#include "fes/errors.hpp"

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kConfig = 2;
constexpr int kData = 3;
constexpr int kTraining = 4;
constexpr int kInfeasible = 5;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string method = "fes";
  std::string day;
  std::string out_dir = "out";
};

void common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON run configuration (defaults apply when omitted)");
  sub->add_option("--seed", o.seed, "overrides the config seed");
  sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
}

fes::cli::RunConfig resolve(const Options& o) {
  auto config = o.config.empty() ? fes::cli::parse_config("{}") : fes::cli::load_config(o.config);
  if (o.seed) fes::cli::apply_seed(config, *o.seed);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast-embedded appliance scheduling: train, schedule, evaluate"};
  app.require_subcommand(1);
  Options o;
  auto* ingest = app.add_subcommand("ingest", "join generation and weather data, report imputation");
  auto* train = app.add_subcommand("train", "two-stage training; writes rtpnn.ckpt and fes.ckpt");
  auto* schedule = app.add_subcommand("schedule", "schedule one test day with fes, exact or ga");
  auto* evaluate = app.add_subcommand("evaluate", "forecast metrics and scheduling cost gaps");
  auto* bench = app.add_subcommand("bench", "per-window timing of fes, exact and ga");
  for (auto* sub : {ingest, train, schedule, evaluate, bench}) common(sub, o);
  schedule->add_option("--method", o.method, "fes | exact | ga")->capture_default_str();
  schedule->add_option("--day", o.day, "test-day index or YYYY-MM-DD date (default: first test day)");
  bool timing = false;
  evaluate->add_flag("--timing", timing, "also run the timing benchmark");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    auto config = resolve(o);
    const std::filesystem::path out = o.out_dir;
    if (ingest->parsed()) {
      fes::cli::cmd_ingest(config, out, std::cerr);
    } else if (train->parsed()) {
      fes::cli::cmd_train(config, out, std::cerr);
    } else if (schedule->parsed()) {
      const auto method = fes::cli::parse_method(o.method);
      const auto result = fes::cli::cmd_schedule(config, out, method, o.day, std::cerr);
      std::cout << "objective " << result.objective << '\n';
    } else if (evaluate->parsed()) {
      if (timing) config.eval.timing = true;
      fes::cli::cmd_evaluate(config, out, std::cerr);
    } else if (bench->parsed()) {
      fes::cli::cmd_bench(config, out, std::cerr);
    }
  } catch (const fes::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const fes::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kConfig;
  } catch (const fes::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kConfig;
  } catch (const fes::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fes::ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fes::TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kTraining;
  } catch (const fes::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
