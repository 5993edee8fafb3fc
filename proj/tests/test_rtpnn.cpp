#include <doctest.h>

#include <sstream>

#include "fes/data/synthetic.hpp"
#include "fes/errors.hpp"
#include "fes/eval/baselines.hpp"
#include "fes/eval/metrics.hpp"
#include "fes/rtpnn/rtpnn.hpp"
#include "support.hpp"

using namespace fes;

TEST_CASE("dp unit substitutes directly") {
  auto a = rtpnn::dp_unit_step(1.0, 3.0, 4.0, 0.0, 1.0, 0.5, 1.0, 0.0);
  CHECK(a.trend == 4.0);
  CHECK(a.passthrough == 3.0);
  auto b = rtpnn::dp_unit_step(123.0, 7.0, 0.0, 99.0, 0.3, 0.3, 1.0, 0.0);
  CHECK(b.level == 7.0);
  for (double alpha2 : {-0.7, 0.0, 0.25, 1.3}) {
    auto c = rtpnn::dp_unit_step(2.0, 2.0, 5.0, 1.0, 0.9, alpha2, 1.0, 1.0);
    CHECK(c.trend == alpha2 * 5.0);
  }
  CHECK_THROWS(rtpnn::dp_unit_step(std::nan(""), 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0));
}

TEST_CASE("model shape follows the feature count") {
  rtpnn::RtpnnModel m(5, {});
  CHECK(m.series() == 6);
  CHECK(m.hidden1() == 6);
  CHECK(m.hidden2() == 3);
  CHECK(m.params().get("dp.alpha1").size() == 6);
  CHECK(m.params().get("hidden1.W").cols() == 18);
  rtpnn::RtpnnModel m0(0, {});
  CHECK(m0.hidden2() == 1);
}

TEST_CASE("zero dense weights give a constant forecast") {
  rtpnn::RtpnnModel m(2, {});
  for (const auto& n : m.params().names())
    if (n.rfind("dp.", 0) != 0) m.params().get(n).setZero();
  rtpnn::Normalizer norm;
  norm.min = Eigen::VectorXd::Zero(3);
  norm.max = Eigen::VectorXd::Constant(3, 10.0);
  m.set_normalizer(norm);
  std::mt19937_64 rng(1);
  auto w = test::random_window(rng, 24, 3);
  const auto y = m.forecast_window(w.input);
  for (Eigen::Index s = 0; s < 24; ++s) CHECK(y(s) == doctest::Approx(5.0));
}

TEST_CASE("forecast depends on slot order") {
  rtpnn::RtpnnModel m(1, {});
  std::mt19937_64 rng(2);
  auto w = test::random_window(rng, 8, 2);
  const auto y = m.forecast_window(w.input);
  CHECK(m.forecast_window(w.input) == y);
  auto rev = w.input;
  rev.older = w.input.older.colwise().reverse();
  rev.newer = w.input.newer.colwise().reverse();
  const Eigen::VectorXd y_rev = m.forecast_window(rev).reverse();
  CHECK((y_rev - y).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("stateless recurrence equals slot-by-slot evaluation") {
  rtpnn::RtpnnModel m(2, {});
  m.params().get("dp.alpha2").setZero();
  m.params().get("dp.beta2").setZero();
  std::mt19937_64 rng(4);
  auto w = test::random_window(rng, 6, 3);
  const auto full = m.forecast_normalized(w.input);
  for (Eigen::Index s = 0; s < 6; ++s) {
    rtpnn::ForecastInput one;
    one.older = w.input.older.row(s);
    one.newer = w.input.newer.row(s);
    CHECK(m.forecast_normalized(one)(0) == full(s));
  }
}

TEST_CASE("window gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    rtpnn::RtpnnConfig cfg;
    cfg.seed = seed;
    cfg.output = seed % 2 ? nn::Activation::Sigmoid : nn::Activation::Linear;
    rtpnn::RtpnnModel m(static_cast<int>(seed % 3), cfg);
    for (const auto& n : m.params().names()) {
      auto& p = m.params().get(n);
      p = p.unaryExpr([&](double v) { return v + test::uniform(rng, -0.5, 0.5); });
    }
    const auto w = test::random_window(rng, 3 + static_cast<Eigen::Index>(seed % 4), m.series());
    const auto grads = m.window_gradients(w);
    const auto check = test::finite_difference_check(m.params(), grads, [&] { return m.window_loss(w); });
    CHECK_MESSAGE(check.max_rel < 1e-4, check.worst << " " << check.max_rel);
  }
}

TEST_CASE("every DP scalar receives gradient") {
  std::mt19937_64 rng(11);
  rtpnn::RtpnnModel m(3, {});
  const auto w = test::random_window(rng, 24, 4);
  const auto g = m.window_gradients(w);
  for (const char* n : {"dp.alpha1", "dp.alpha2", "dp.beta1", "dp.beta2"})
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(g.at(n)(i) != 0.0);
}

TEST_CASE("normaliser round-trips and ignores test data") {
  std::mt19937_64 rng(5);
  std::vector<rtpnn::TrainingWindow> train;
  for (int i = 0; i < 4; ++i) {
    auto w = test::random_window(rng, 24, 2);
    w.input.older *= 30.0;
    w.input.newer *= 30.0;
    w.target *= 30.0;
    train.push_back(w);
  }
  const auto norm = rtpnn::Normalizer::fit(train);
  for (const auto& w : train)
    for (Eigen::Index s = 0; s < 24; ++s) {
      const double x = w.input.newer(s, 1);
      CHECK(std::abs(norm.denormalize(1, norm.normalize(1, x)) - x) < 1e-12);
    }
  CHECK(norm.min(0) >= 0.0);
  CHECK(norm.max(0) <= 30.0);
}

TEST_CASE("constant target is learnt") {
  std::mt19937_64 rng(9);
  std::vector<rtpnn::TrainingWindow> train;
  for (int i = 0; i < 10; ++i) {
    auto w = test::random_window(rng, 24, 1);
    w.target.setConstant(4.0);
    w.input.older.col(0).setConstant(4.0);
    w.input.newer.col(0).setConstant(4.0);
    train.push_back(w);
  }
  rtpnn::RtpnnConfig cfg;
  cfg.l2 = 0.0;
  rtpnn::RtpnnModel m(0, cfg);
  rtpnn::Stage1Config s1;
  s1.epochs = 40;
  s1.lr = 1e-2;
  const auto res = rtpnn::stage1_train(m, train, s1);
  CHECK(res.loss_history.size() == 40);
  CHECK(res.loss_history.back() < 1e-4);
}

TEST_CASE("stage 1 is deterministic and checkpoints reproduce forecasts") {
  data::SyntheticConfig sc;
  sc.days = 20;
  const auto windows = data::all_windows(data::synthetic_series(sc), 24);
  auto run = [&] {
    rtpnn::RtpnnModel m(3, {});
    rtpnn::Stage1Config s1;
    s1.epochs = 5;
    auto res = rtpnn::stage1_train(m, windows, s1);
    return std::pair{m, res};
  };
  auto [m1, r1] = run();
  auto [m2, r2] = run();
  CHECK(r1.loss_history == r2.loss_history);
  CHECK(nn::checksum(m1.params()) == nn::checksum(m2.params()));

  std::stringstream ss;
  nn::write_checkpoint(ss, m1.to_checkpoint());
  const auto back = rtpnn::RtpnnModel::from_checkpoint(nn::read_checkpoint(ss));
  CHECK(back.forecast_window(windows[3].input) == m1.forecast_window(windows[3].input));
}

TEST_CASE("trained forecaster beats yesterday on the periodic series") {
  data::SyntheticConfig sc;
  sc.days = 60;
  sc.noise_kw = 0.2;
  sc.day_sigma = 0.05;
  const auto table = data::synthetic_series(sc);
  data::SplitSpec split;
  split.train_days = 40;
  split.test_days = 0;
  const auto ws = data::build_windows(table, split);
  rtpnn::RtpnnModel m(3, {});
  rtpnn::Stage1Config s1;
  s1.epochs = 100;
  s1.lr = 3e-3;
  rtpnn::stage1_train(m, ws.train, s1);
  double mse_model = 0, mse_naive = 0;
  for (const auto& w : ws.train) {
    mse_model += (m.forecast_window(w.input) - w.target).squaredNorm();
    mse_naive += (eval::naive_forecast(w.input) - w.target).squaredNorm();
  }
  CHECK(mse_model < mse_naive);
}

TEST_CASE("bad input shapes are rejected") {
  rtpnn::RtpnnModel m(2, {});
  std::mt19937_64 rng(1);
  const auto w = test::random_window(rng, 24, 2);
  CHECK_THROWS_AS(m.forecast_window(w.input), ShapeError);
  CHECK_THROWS_AS(rtpnn::RtpnnModel(-1, {}), ParameterError);
}
