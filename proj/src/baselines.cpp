#include "fes/eval/baselines.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <numeric>
#include <random>

#include "fes/errors.hpp"

namespace fes::eval {

namespace {

Eigen::RowVectorXd design_row(const rtpnn::ForecastInput& in, Eigen::Index s) {
  const Eigen::Index k = in.series();
  Eigen::RowVectorXd row(1 + 2 * k);
  row(0) = 1.0;
  row.segment(1, k) = in.older.row(s);
  row.segment(1 + k, k) = in.newer.row(s);
  return row;
}

}  // namespace

Eigen::VectorXd naive_forecast(const rtpnn::ForecastInput& input) { return input.newer.col(0); }

LinearBaseline LinearBaseline::fit(std::span<const rtpnn::TrainingWindow> train) {
  if (train.empty()) throw DataError("linear baseline: no training windows");
  Eigen::Index rows = 0;
  for (const auto& w : train) rows += w.input.slots();
  const Eigen::Index cols = 1 + 2 * train.front().input.series();
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  Eigen::Index r = 0;
  for (const auto& w : train)
    for (Eigen::Index s = 0; s < w.input.slots(); ++s, ++r) {
      X.row(r) = design_row(w.input, s);
      y(r) = w.target(s);
    }
  LinearBaseline lb;
  lb.coef_ = X.colPivHouseholderQr().solve(y);
  return lb;
}

Eigen::VectorXd LinearBaseline::forecast(const rtpnn::ForecastInput& input) const {
  Eigen::VectorXd out(input.slots());
  for (Eigen::Index s = 0; s < input.slots(); ++s) out(s) = design_row(input, s).dot(coef_);
  return out;
}

namespace {

template <typename Scalar>
Scalar mlp_slot(const Vec<Scalar>& x, const Mat<Scalar>& w1, const Mat<Scalar>& b1, const Mat<Scalar>& w2,
                const Mat<Scalar>& b2) {
  const Vec<Scalar> h = nn::dense_forward(x, w1, b1.col(0), nn::Activation::Sigmoid, "mlp.hidden");
  return nn::dense_forward(h, w2, b2.col(0), nn::Activation::Linear, "mlp.output")(0);
}

Eigen::VectorXd mlp_input(const rtpnn::Normalizer& norm, const rtpnn::ForecastInput& in, Eigen::Index s) {
  const Eigen::Index k = in.series();
  Eigen::VectorXd x(2 * k);
  for (Eigen::Index f = 0; f < k; ++f) {
    x(f) = norm.normalize(f, in.older(s, f));
    x(k + f) = norm.normalize(f, in.newer(s, f));
  }
  return x;
}

}  // namespace

MlpBaseline MlpBaseline::fit(std::span<const rtpnn::TrainingWindow> train, const MlpConfig& c) {
  if (train.empty()) throw DataError("mlp baseline: no training windows");
  if (c.hidden < 1 || c.epochs < 0 || c.batch_size < 1) throw ConfigError("mlp baseline: invalid configuration");
  MlpBaseline m;
  m.norm_ = rtpnn::Normalizer::fit(train);
  std::mt19937_64 rng(c.seed);
  const Eigen::Index in_dim = 2 * train.front().input.series();
  m.params_.add("mlp.W1", nn::init_dense(c.hidden, in_dim, rng));
  m.params_.add_vector("mlp.b1", Eigen::VectorXd::Zero(c.hidden));
  m.params_.add("mlp.W2", nn::init_dense(1, c.hidden, rng));
  m.params_.add_vector("mlp.b2", Eigen::VectorXd::Zero(1));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(c.batch_size);
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      ad::Tape tape;
      nn::ParamBinding p(m.params_, tape);
      ad::Var loss(0.0);
      Eigen::Index n = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& w = train[order[k]];
        for (Eigen::Index s = 0; s < w.input.slots(); ++s, ++n) {
          const Vec<ad::Var> x = mlp_input(m.norm_, w.input, s).cast<ad::Var>();
          const ad::Var e = mlp_slot<ad::Var>(x, p["mlp.W1"], p["mlp.b1"], p["mlp.W2"], p["mlp.b2"]) -
                            m.norm_.normalize(0, w.target(s));
          loss = loss + e * e;
        }
      }
      nn::adam_step(m.params_, nn::backprop(tape, loss, p, 1.0 / static_cast<double>(n)), c.lr);
    }
  }
  return m;
}

Eigen::VectorXd MlpBaseline::forecast(const rtpnn::ForecastInput& input) const {
  Eigen::VectorXd out(input.slots());
  for (Eigen::Index s = 0; s < input.slots(); ++s) {
    const double y = mlp_slot<double>(mlp_input(norm_, input, s), params_.get("mlp.W1"), params_.get("mlp.b1"),
                                      params_.get("mlp.W2"), params_.get("mlp.b2"));
    out(s) = norm_.denormalize(0, y);
  }
  return out;
}

}  // namespace fes::eval
