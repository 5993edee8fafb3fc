// Acceptance run: one PASS/FAIL line per criterion.
//
//   fes_acceptance [--only N[,N...]] [--known-fail N[,N...]]
//
// The exit status is nonzero when a criterion fails, except criteria listed
// with --known-fail, which still print FAIL but do not change the status.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "fes/cli/commands.hpp"
#include "fes/data/appliances.hpp"
#include "fes/data/synthetic.hpp"
#include "fes/errors.hpp"
#include "fes/eval/baselines.hpp"
#include "fes/eval/metrics.hpp"
#include "fes/sched/constraints.hpp"
#include "fes/sched/exact_solver.hpp"
#include "fes/sched/ga_solver.hpp"
#include "fes/scheduling/scheduling_layer.hpp"
#include "support.hpp"

using namespace fes;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

// 1. exact vs brute force
Outcome oracle_equivalence() {
  std::mt19937_64 rng(1);
  const auto t0 = Clock::now();
  int feasible = 0, mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto w = test::random_small(rng, 4, 8);
    const auto sol = solve_exact(w);
    const auto bf = enumerate_bruteforce(w, 1u << 20);
    if (bf.status == BruteForceStatus::CapExceeded || bool(sol) != bool(bf.solution)) {
      ++mismatches;
      continue;
    }
    if (!sol) continue;
    ++feasible;
    if (sol->objective != bf.solution->objective || !(sol->schedule == bf.solution->schedule)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0, "1000 instances (" + std::to_string(feasible) + " feasible), " +
                                              std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", secs)};
}

// 2. every emitted schedule validates
Outcome constraint_soundness() {
  std::mt19937_64 rng(2);
  int scenarios = 0, emitted = 0, violations = 0, fes_declined = 0, ga_declined = 0;
  auto check = [&](const Schedule& s, const ScenarioWindow& w) {
    ++emitted;
    if (!validate(s, w).empty()) ++violations;
  };
  while (scenarios < 100) {
    const auto w = scenarios % 2 ? test::random_household(rng) : test::random_small(rng);
    const auto ex = solve_exact(w);
    if (!ex) continue;
    ++scenarios;
    check(ex->schedule, w);
    auto model = test::untrained_fes(w);
    test::randomize_heads(model, rng);
    try {
      check(scheduling::decode(scheduling::soft_schedule(model, w.generation, w), w), w);
    } catch (const InfeasibleError&) {
      ++fes_declined;
    }
    GaConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(scenarios);
    try {
      check(ga_solve(w, cfg).schedule, w);
    } catch (const InfeasibleError&) {
      ++ga_declined;
    }
  }
  return {violations == 0, std::to_string(emitted) + " schedules from 100 feasible scenarios, " +
                               std::to_string(violations) + " with violations (decoder declined " +
                               std::to_string(fes_declined) + ", ga declined " + std::to_string(ga_declined) + ")"};
}

// 3. full-model gradients vs central differences
Outcome gradient_correctness() {
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    rtpnn::RtpnnConfig cfg;
    cfg.seed = seed;
    cfg.output = seed % 2 ? nn::Activation::Sigmoid : nn::Activation::Linear;
    rtpnn::RtpnnModel m(static_cast<int>(seed % 3), cfg);
    for (const auto& n : m.params().names()) {
      auto& p = m.params().get(n);
      p = p.unaryExpr([&](double v) { return v + test::uniform(rng, -0.5, 0.5); });
    }
    // 3 to 6 slots, so every window unrolls the DP recurrences at least three steps
    const auto w = test::random_window(rng, 3 + static_cast<Eigen::Index>(seed % 4), m.series());
    const auto grads = m.window_gradients(w);
    const auto r = test::finite_difference_check(m.params(), grads, [&] { return m.window_loss(w); });
    entries += r.checked;
    if (r.max_rel > worst) {
      worst = r.max_rel;
      where = "seed " + std::to_string(seed) + " " + r.worst;
    }
  }
  return {worst < 1e-4, std::to_string(entries) + " partials over 100 seeds, max relative error " +
                            fmt("%.2e", worst) + (where.empty() ? "" : " (" + where + ")")};
}

// 4. forecast skill on the periodic synthetic series
Outcome forecasting_skill() {
  data::SyntheticConfig sc;
  sc.days = 120;
  sc.seed = 1;
  const auto table = data::synthetic_series(sc);
  data::SplitSpec split;
  split.train_days = 80;
  split.test_days = 0;
  const auto ws = data::build_windows(table, split);

  rtpnn::RtpnnConfig rc;
  rc.seed = 1;
  rtpnn::RtpnnModel model(table.feature_count(), rc);
  rtpnn::Stage1Config s1;
  s1.epochs = 300;
  s1.lr = 3e-3;
  s1.seed = 1;
  const auto t0 = Clock::now();
  rtpnn::stage1_train(model, ws.train, s1);
  const double secs = seconds_since(t0);

  const auto lin = eval::LinearBaseline::fit(ws.train);
  Eigen::VectorXd actual, f_model, f_naive, f_lin;
  for (const auto& w : ws.test) {
    actual = concat(actual, w.target);
    f_model = concat(f_model, model.forecast_window(w.input));
    f_naive = concat(f_naive, eval::naive_forecast(w.input));
    f_lin = concat(f_lin, lin.forecast(w.input));
  }
  const double m = eval::forecast_metrics(actual, f_model).mse;
  const double n = eval::forecast_metrics(actual, f_naive).mse;
  const double l = eval::forecast_metrics(actual, f_lin).mse;
  return {m < n && m < l && secs < 300.0,
          "test MSE rtpnn " + fmt("%.3f", m) + ", naive " + fmt("%.3f", n) + ", linear " + fmt("%.3f", l) + " on " +
              std::to_string(ws.test.size()) + " test days; training " + fmt("%.1f s", secs)};
}

// Shared by 5 and 6: two-stage training on 60 synthetic days.
struct Trained {
  std::vector<rtpnn::TrainingWindow> test;
  std::vector<DeviceSpec> devices;
  std::optional<scheduling::FesModel> fes;
  std::size_t labelled = 0;
};

Trained& trained() {
  static Trained t = [] {
    Trained out;
    data::SyntheticConfig sc;
    sc.days = 84;
    sc.seed = 1;
    const auto table = data::synthetic_series(sc);
    data::SplitSpec split;
    split.train_days = 60;
    split.test_days = 20;
    auto ws = data::build_windows(table, split);
    rtpnn::RtpnnConfig rc;
    rc.seed = 1;
    rtpnn::RtpnnModel forecaster(table.feature_count(), rc);
    rtpnn::Stage1Config s1;
    s1.epochs = 100;
    s1.lr = 3e-3;
    s1.seed = 1;
    rtpnn::stage1_train(forecaster, ws.train, s1);

    out.devices = data::default_devices();
    std::vector<scheduling::Stage2Window> labelled;
    for (const auto& w : ws.train) {
      auto sc2 = data::make_scenario(out.devices, forecaster.forecast_window(w.input));
      auto sol = solve_exact(sc2);
      if (sol) labelled.push_back({std::move(sc2), std::move(sol->schedule)});
    }
    out.labelled = labelled.size();
    std::vector<std::string> names;
    for (const auto& d : out.devices) names.push_back(d.name);
    out.fes.emplace(forecaster, names, 24);
    scheduling::Stage2Config s2;
    s2.seed = 1;
    scheduling::stage2_train(*out.fes, labelled, s2);
    out.test = std::move(ws.test);
    return out;
  }();
  return t;
}

// 5. cost gap of decoded schedules and of the GA
Outcome near_optimal() {
  auto& t = trained();
  std::vector<std::string> days;
  std::vector<double> exact, fes_obj, ga_obj;
  int skipped = 0;
  for (std::size_t d = 0; d < t.test.size(); ++d) {
    try {
      const auto inf = scheduling::infer(*t.fes, t.test[d].input, data::make_scenario(t.devices, Eigen::VectorXd::Zero(24)));
      const auto sc = data::make_scenario(t.devices, inf.forecast);
      const auto ex = solve_exact(sc);
      if (!ex) {
        ++skipped;
        continue;
      }
      GaConfig cfg;
      cfg.seed = 1000 + d;
      const auto ga = ga_solve(sc, cfg);
      days.push_back(std::to_string(d));
      exact.push_back(ex->objective);
      fes_obj.push_back(objective(inf.schedule, sc));
      ga_obj.push_back(ga.objective);
    } catch (const InfeasibleError&) {
      ++skipped;
    }
  }
  if (days.empty()) return {false, "no test day could be scheduled"};
  const auto r = eval::cost_gap(days, exact, {{"fes", fes_obj}, {"ga", ga_obj}});
  const auto& f = r.methods.at("fes").pct;
  const auto& g = r.methods.at("ga").pct;
  const bool fes_ok = f.mean <= 5.0 && f.max <= 10.0;
  const bool separated = g.mean > f.mean;
  return {fes_ok && separated, std::to_string(days.size()) + " test days (" + std::to_string(skipped) +
                                   " skipped, " + std::to_string(t.labelled) + " labelled train days): fes gap mean " +
                                   fmt("%.3f%%", f.mean) + " max " + fmt("%.3f%%", f.max) + " [" +
                                   (fes_ok ? "ok" : "FAIL") + "]; ga gap mean " + fmt("%.3f%%", g.mean) +
                                   " vs fes [" + (separated ? "ok" : "FAIL: ga not worse than fes") + "]"};
}

// 6. fes < exact < ga, fes at least 5x faster than exact
Outcome speed_ordering() {
  auto& t = trained();
  const std::size_t windows = std::min<std::size_t>(10, t.test.size());
  const auto base = data::make_scenario(t.devices, Eigen::VectorXd::Zero(24));
  auto planned = [&](std::size_t w) {
    auto sc = base;
    sc.generation = t.fes->forecaster().forecast_window(t.test[w].input);
    return sc;
  };
  volatile double sink = 0.0;
  const std::vector<std::pair<std::string, eval::TimedTask>> methods{
      {"fes", [&](std::size_t w) { sink = sink + scheduling::infer(*t.fes, t.test[w].input, base).forecast(0); }},
      {"exact",
       [&](std::size_t w) {
         const auto s = solve_exact(planned(w));
         sink = sink + (s ? s->objective : 0.0);
       }},
      {"ga", [&](std::size_t w) { sink = sink + ga_solve(planned(w)).objective; }},
  };
  const auto table = eval::timing_bench(methods, windows, 3);
  double fes = 0, ex = 0, ga = 0;
  for (const auto& r : table.rows) (r.method == "fes" ? fes : r.method == "exact" ? ex : ga) = r.mean_ms;
  const bool ok = fes < ex && ex < ga && ex >= 5.0 * fes;
  return {ok, "mean ms per window: fes " + fmt("%.3f", fes) + ", exact " + fmt("%.3f", ex) + ", ga " +
                  fmt("%.3f", ga) + "; exact/fes " + fmt("%.0fx", ex / fes)};
}

// 7. softmax and positivity invariants
Outcome softmax_invariants() {
  std::mt19937_64 rng(7);
  int row_fail = 0, weight_fail = 0, mono_fail = 0;
  double worst_row = 0.0;
  for (int draw = 0; draw < 10000; ++draw) {
    const auto w = test::random_small(rng, 5, 24);
    auto m = test::untrained_fes(w);
    test::randomize_heads(m, rng, 6.0);
    for (auto k : scheduling::kHeadInputs)
      if (!(m.effective_weights(k).minCoeff() > 0.0)) ++weight_fail;
    Eigen::VectorXd g = w.generation;
    const auto soft = scheduling::soft_schedule(m, g, w);
    for (Eigen::Index n = 0; n < soft.x.rows(); ++n) {
      const double err = std::abs(soft.x.row(n).sum() - 1.0);
      worst_row = std::max(worst_row, err);
      if (err > 1e-9) ++row_fail;
    }
    const int s = test::uniform_int(rng, 0, w.slots - 1);
    g(s) += test::uniform(rng, 1e-3, 5.0);
    const auto bumped = scheduling::soft_schedule(m, g, w);
    for (Eigen::Index n = 0; n < soft.x.rows(); ++n)
      if (bumped.x(n, s) < soft.x(n, s)) ++mono_fail;
  }
  return {row_fail == 0 && weight_fail == 0 && mono_fail == 0,
          "10000 draws: row-sum failures " + std::to_string(row_fail) + " (max |sum-1| " + fmt("%.1e", worst_row) +
              "), non-positive weights " + std::to_string(weight_fail) + ", monotonicity failures " +
              std::to_string(mono_fail)};
}

// 8. train + evaluate twice, byte-compare every artifact
Outcome determinism() {
  const auto cfg = cli::parse_config(R"({
    "seed": 7,
    "data": {"source": "synthetic", "synthetic": {"days": 40}},
    "split": {"train_days": 24, "test_days": 10},
    "stage1": {"epochs": 30, "lr": 0.003},
    "stage2": {"epochs": 5},
    "eval": {"battery_sweep": [0.5, 1.0]}
  })");
  std::vector<std::filesystem::path> dirs;
  for (const char* name : {"determinism_a", "determinism_b"}) {
    auto c = cfg;
    cli::apply_seed(c, c.seed);
    const auto dir = test::scratch_dir(name);
    std::ostringstream log;
    cli::cmd_train(c, dir, log);
    cli::cmd_evaluate(c, dir, log);
    dirs.push_back(dir);
  }
  std::set<std::string> names;
  for (const auto& dir : dirs)
    for (const auto& e : std::filesystem::directory_iterator(dir)) names.insert(e.path().filename().string());
  int differ = 0;
  std::string which;
  for (const auto& n : names) {
    if (!std::filesystem::exists(dirs[0] / n) || !std::filesystem::exists(dirs[1] / n) ||
        test::slurp(dirs[0] / n) != test::slurp(dirs[1] / n)) {
      ++differ;
      which += " " + n;
    }
  }
  const bool has_ckpt = names.count("rtpnn.ckpt") && names.count("fes.ckpt");
  return {differ == 0 && has_ckpt, std::to_string(names.size()) + " artifacts compared, " + std::to_string(differ) +
                                       " differ" + which};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, known;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only")
      only = parse_list(argv[i + 1]);
    else if (flag == "--known-fail")
      known = parse_list(argv[i + 1]);
    else {
      std::cerr << "usage: fes_acceptance [--only N,...] [--known-fail N,...]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact solver matches brute force", oracle_equivalence},
      {"schedules from fes, exact and ga validate", constraint_soundness},
      {"rtpnn gradients match finite differences", gradient_correctness},
      {"rtpnn beats naive and linear forecasts", forecasting_skill},
      {"fes near-optimal, ga separated", near_optimal},
      {"speed ordering fes < exact < ga", speed_ordering},
      {"softmax and positivity invariants", softmax_invariants},
      {"train + evaluate are byte-deterministic", determinism},
  };

  int status = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool tolerated = !o.pass && known.count(id);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt("%.1f s", seconds_since(t0)) << ")" << (tolerated ? " [known failure]" : "") << std::endl;
    if (!o.pass && !tolerated) status = 1;
  }
  return status;
}
