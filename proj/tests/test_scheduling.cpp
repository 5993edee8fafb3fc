#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fes/errors.hpp"
#include "fes/sched/constraints.hpp"
#include "fes/sched/exact_solver.hpp"
#include "fes/scheduling/scheduling_layer.hpp"
#include "support.hpp"

using namespace fes;
using namespace fes::scheduling;

namespace {

// free parameter whose softplus is exactly w
double inv_softplus(double w) { return std::log(std::expm1(w)); }

void set_all(FesModel& m, double effective) {
  for (auto k : kHeadInputs) m.head_params().get(head_param_name(k)).setConstant(inv_softplus(effective));
}

}  // namespace

TEST_CASE("slot scores substitute directly") {
  auto w = test::window(2, Eigen::VectorXd::Zero(2), 0.0, 1.0, 1.0, {test::device("d", 1.0, 1, Eigen::VectorXd::Zero(2))});
  auto m = test::untrained_fes(w);
  set_all(m, 1.0);
  Eigen::VectorXd g(2);
  g << 5, 0;
  const auto a = slot_scores(m, g, w, 0);
  CHECK(a(0) == doctest::Approx(2.0));
  CHECK(a(1) == doctest::Approx(-3.0));
}

TEST_CASE("scores fall with cost and scale with the generation weight") {
  Eigen::VectorXd c(3);
  c << 0.2, 0.7, 0.2;
  auto w = test::window(3, Eigen::VectorXd::Zero(3), 1.0, 2.0, 3.0, {test::device("d", 1.0, 1, c)});
  auto m = test::untrained_fes(w);
  const Eigen::VectorXd g = (Eigen::VectorXd(3) << 1.0, 1.0, 4.0).finished();
  auto a = slot_scores(m, g, w, 0);
  CHECK(a(0) > a(1));
  const double diff = a(2) - a(0);
  m.head_params().get(head_param_name(HeadInput::Generation))
      .setConstant(inv_softplus(2.0 * std::log(2.0)));  // default effective weight is ln 2
  a = slot_scores(m, g, w, 0);
  CHECK(a(2) - a(0) == doctest::Approx(2.0 * diff));
}

TEST_CASE("equal scores give a uniform row") {
  auto w = test::window(4, Eigen::VectorXd::Constant(4, 2.0), 0.0, 1.0, 1.0,
                        {test::device("d", 1.0, 1, Eigen::VectorXd::Constant(4, 0.5))});
  const auto soft = soft_schedule(test::untrained_fes(w), w.generation, w);
  for (int s = 0; s < 4; ++s) CHECK(soft.x(0, s) == doctest::Approx(0.25));
}

TEST_CASE("forbidden slot gets negligible probability") {
  Eigen::VectorXd c(3);
  c << 0.0, test::kInf, 0.0;
  auto w = test::window(3, Eigen::VectorXd::Zero(3), 0.0, 1.0, 1.0, {test::device("d", 1.0, 1, c)});
  auto m = test::untrained_fes(w);
  m.head_params().get(head_param_name(HeadInput::Cost)).setConstant(inv_softplus(0.1));
  const auto soft = soft_schedule(m, w.generation, w);
  CHECK(soft.x(0, 1) < 1e-3 * soft.x(0, 0));
}

TEST_CASE("shifting a cost row leaves its soft row unchanged") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    auto w = test::random_small(rng, 3, 8);
    auto m = test::untrained_fes(w);
    test::randomize_heads(m, rng);
    // shift invariance needs the cost weight equal across the row
    auto& wc = m.head_params().get(head_param_name(HeadInput::Cost));
    for (Eigen::Index n = 0; n < wc.rows(); ++n) wc.row(n).setConstant(wc(n, 0));
    for (auto& d : w.devices) d.cost = data::cap_infinite(d.cost);
    const auto before = soft_schedule(m, w.generation, w);
    auto shifted = w;
    shifted.devices[0].cost.array() += 0.75;
    const auto after = soft_schedule(m, shifted.generation, shifted);
    CHECK((after.x - before.x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("decode keeps feasible one-hot rows") {
  const auto w = test::toy_two_devices();
  SoftSchedule soft{Eigen::MatrixXd::Zero(2, 4)};
  soft.x(0, 1) = 1.0;
  soft.x(1, 0) = 1.0;
  CHECK(decode(soft, w).starts() == std::vector<int>{1, 0});
}

TEST_CASE("decode moves the second device to its next-best slot") {
  const auto w = test::toy_two_devices();
  SoftSchedule soft{Eigen::MatrixXd(2, 4)};
  soft.x << 0.7, 0.2, 0.06, 0.04, 0.6, 0.1, 0.25, 0.05;
  // slot 1 is taken under the 1 kW inverter; slot 3 is b's next choice and
  // still covered by the energy banked in slots 1-2
  CHECK(decode(soft, w).starts() == std::vector<int>{0, 2});
}

TEST_CASE("decode raises when a device cannot fit") {
  auto w = test::toy_two_devices();
  w.generation.setZero();
  SoftSchedule soft{Eigen::MatrixXd::Constant(2, 4, 0.25)};
  CHECK_THROWS_AS(decode(soft, w), InfeasibleError);
}

TEST_CASE("decoded schedules always validate") {
  std::mt19937_64 rng(19);
  int decoded = 0;
  for (int i = 0; i < 300; ++i) {
    const auto w = test::random_small(rng);
    auto m = test::untrained_fes(w);
    test::randomize_heads(m, rng);
    try {
      const auto sched = decode(soft_schedule(m, w.generation, w), w);
      CHECK(validate(sched, w).empty());
      ++decoded;
    } catch (const InfeasibleError&) {
    }
  }
  CHECK(decoded > 50);
}

TEST_CASE("soft rows are stochastic and weights positive") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto w = test::random_small(rng, 4, 12);
    auto m = test::untrained_fes(w);
    test::randomize_heads(m, rng, 8.0);
    const auto soft = soft_schedule(m, w.generation, w);
    for (Eigen::Index n = 0; n < soft.x.rows(); ++n) CHECK(std::abs(soft.x.row(n).sum() - 1.0) < 1e-9);
    for (auto k : kHeadInputs) CHECK(m.effective_weights(k).minCoeff() > 0.0);
  }
}

TEST_CASE("stage 2 fits a single labelled window") {
  Eigen::VectorXd c(4);
  c << 0.5, 0.5, 0.5, 0.5;
  auto w = test::window(4, Eigen::VectorXd::Constant(4, 3.0), 0.0, 5.0, 5.0, {test::device("d", 1.0, 1, c)});
  auto m = test::untrained_fes(w);
  const std::vector<int> label{2};
  const std::vector<Stage2Window> data{{w, Schedule::from_starts(label, 4)}};
  const auto before = nn::checksum(m.forecaster().params());
  Stage2Config cfg;
  cfg.epochs = 200;
  cfg.lr = 0.05;
  const auto res = stage2_train(m, data, cfg);
  for (int e = 1; e < 5; ++e) CHECK(res.loss_history[e] < res.loss_history[e - 1]);
  Eigen::Index best;
  soft_schedule(m, w.generation, w).x.row(0).maxCoeff(&best);
  CHECK(best == 2);
  CHECK(res.loss_history.back() < 0.05);
  CHECK(nn::checksum(m.forecaster().params()) == before);
}

TEST_CASE("stage 2 rejects labels that are not one-hot") {
  const auto w = test::toy_two_devices();
  auto m = test::untrained_fes(w);
  Schedule bad(2, 4);
  bad.matrix()(0, 0) = 1;
  bad.matrix()(0, 1) = 1;
  bad.matrix()(1, 2) = 1;
  const std::vector<Stage2Window> data{{w, bad}};
  CHECK_THROWS_AS(stage2_train(m, data, {}), DataError);
}

TEST_CASE("fes checkpoint is tied to its forecaster") {
  std::mt19937_64 rng(4);
  const auto w = test::toy_two_devices();
  auto m = test::untrained_fes(w);
  test::randomize_heads(m, rng);
  std::stringstream ss;
  nn::write_checkpoint(ss, m.to_checkpoint());
  const auto ck = nn::read_checkpoint(ss);
  const auto back = FesModel::from_checkpoint(ck, m.forecaster());
  CHECK(soft_schedule(back, w.generation, w).x == soft_schedule(m, w.generation, w).x);
  rtpnn::RtpnnConfig other;
  other.seed = 99;
  CHECK_THROWS_AS(FesModel::from_checkpoint(ck, rtpnn::RtpnnModel(0, other)), DataError);
}

TEST_CASE("schedule CSV uses 1-based slots") {
  const auto w = test::toy_two_devices();
  const std::vector<int> st{0, 1};
  const auto csv = schedule_csv(Schedule::from_starts(st, 4), w);
  std::istringstream is(csv);
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "device_id,device_name,start_slot,start_time,duration_slots,power_kw");
  CHECK(first.rfind("1,a,1,", 0) == 0);
}
