#include "fes/rtpnn/rtpnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fes/errors.hpp"
#include "fes/time.hpp"

namespace fes::rtpnn {

namespace {

const std::vector<std::string> kDpNames = {"dp.alpha1", "dp.alpha2", "dp.beta1", "dp.beta2"};

template <typename Scalar, typename Getter>
Weights<Scalar> gather(Getter&& get) {
  Weights<Scalar> w;
  w.alpha1 = get("dp.alpha1").col(0);
  w.alpha2 = get("dp.alpha2").col(0);
  w.beta1 = get("dp.beta1").col(0);
  w.beta2 = get("dp.beta2").col(0);
  w.w1 = get("hidden1.W");
  w.b1 = get("hidden1.b").col(0);
  w.w2 = get("hidden2.W");
  w.b2 = get("hidden2.b").col(0);
  w.w_out = get("output.W");
  w.b_out = get("output.b").col(0);
  return w;
}

template <typename Scalar>
Scalar window_objective(const Weights<Scalar>& w, const Eigen::MatrixXd& older, const Eigen::MatrixXd& newer,
                        const Eigen::VectorXd& target, nn::Activation output, double l2) {
  const Vec<Scalar> pred = forward_window(w, older, newer, output);
  Scalar sse(0.0);
  for (Eigen::Index s = 0; s < pred.size(); ++s) {
    const Scalar e = pred(s) - Scalar(target(s));
    sse += e * e;
  }
  Scalar loss = sse / Scalar(static_cast<double>(pred.size()));
  if (l2 > 0.0) {
    Scalar pen(0.0);
    for (const auto* v : {&w.alpha1, &w.alpha2, &w.beta1, &w.beta2})
      for (Eigen::Index i = 0; i < v->size(); ++i) pen += (*v)(i) * (*v)(i);
    loss += Scalar(l2) * pen;
  }
  return loss;
}

}  // namespace

DpOutput<double> dp_unit_step(double older, double newer, double trend_prev, double level_prev, double alpha1,
                              double alpha2, double beta1, double beta2) {
  if (!std::isfinite(older) || !std::isfinite(newer) || !std::isfinite(trend_prev) || !std::isfinite(level_prev))
    throw DataError("dp unit: non-finite input");
  return dp_unit_step<double>(older, newer, trend_prev, level_prev, alpha1, alpha2, beta1, beta2);
}

Normalizer Normalizer::fit(std::span<const TrainingWindow> windows) {
  if (windows.empty()) throw DataError("normaliser: no training windows");
  const Eigen::Index series = windows.front().input.series();
  Normalizer n;
  n.min = Eigen::VectorXd::Constant(series, std::numeric_limits<double>::infinity());
  n.max = Eigen::VectorXd::Constant(series, -std::numeric_limits<double>::infinity());
  for (const auto& w : windows) {
    n.min = n.min.cwiseMin(w.input.older.colwise().minCoeff().transpose());
    n.min = n.min.cwiseMin(w.input.newer.colwise().minCoeff().transpose());
    n.max = n.max.cwiseMax(w.input.older.colwise().maxCoeff().transpose());
    n.max = n.max.cwiseMax(w.input.newer.colwise().maxCoeff().transpose());
    n.min(0) = std::min(n.min(0), w.target.minCoeff());
    n.max(0) = std::max(n.max(0), w.target.maxCoeff());
  }
  // constant series: centre it at 0.5 instead of dividing by zero
  for (Eigen::Index f = 0; f < series; ++f) {
    if (n.max(f) - n.min(f) < 1e-12) {
      n.min(f) -= 0.5;
      n.max(f) += 0.5;
    }
  }
  return n;
}

Eigen::MatrixXd Normalizer::normalize(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index f = 0; f < rows.cols(); ++f) out.col(f) = (rows.col(f).array() - min(f)) / range(f);
  return out;
}

RtpnnModel::RtpnnModel(int features, const RtpnnConfig& config) : features_(features), config_(config) {
  if (features < 0) throw ParameterError("rtpnn: feature count must be >= 0");
  std::mt19937_64 rng(config.seed);
  const Eigen::Index F1 = series();
  params_.add_vector("dp.alpha1", Eigen::VectorXd::Constant(F1, 1.0));
  params_.add_vector("dp.alpha2", Eigen::VectorXd::Constant(F1, 0.1));
  params_.add_vector("dp.beta1", Eigen::VectorXd::Constant(F1, 1.0));
  params_.add_vector("dp.beta2", Eigen::VectorXd::Constant(F1, 0.1));
  params_.add("hidden1.W", nn::init_dense(hidden1(), 3 * F1, rng));
  params_.add_vector("hidden1.b", Eigen::VectorXd::Zero(hidden1()));
  params_.add("hidden2.W", nn::init_dense(hidden2(), hidden1(), rng));
  params_.add_vector("hidden2.b", Eigen::VectorXd::Zero(hidden2()));
  params_.add("output.W", nn::init_dense(1, hidden2(), rng));
  params_.add_vector("output.b", Eigen::VectorXd::Zero(1));
  norm_.min = Eigen::VectorXd::Zero(F1);
  norm_.max = Eigen::VectorXd::Ones(F1);
}

void RtpnnModel::set_normalizer(Normalizer norm) {
  if (norm.min.size() != series() || norm.max.size() != series())
    throw ShapeError("rtpnn: normaliser has " + std::to_string(norm.min.size()) + " series, model expects " +
                     std::to_string(series()));
  norm_ = std::move(norm);
}

Weights<double> RtpnnModel::weights() const {
  return gather<double>([this](const std::string& n) -> const Eigen::MatrixXd& { return params_.get(n); });
}

Weights<ad::Var> RtpnnModel::bind(const nn::ParamBinding& binding) const {
  return gather<ad::Var>([&binding](const std::string& n) -> const Mat<ad::Var>& { return binding[n]; });
}

void RtpnnModel::check_input(const ForecastInput& input) const {
  if (input.newer.cols() != series() || input.older.cols() != series())
    throw ShapeError("rtpnn: input has " + std::to_string(input.newer.cols()) + " series, model expects " +
                     std::to_string(series()));
  if (input.older.rows() != input.newer.rows()) throw ShapeError("rtpnn: older/newer lag rows differ");
}

Eigen::VectorXd RtpnnModel::forecast_normalized(const ForecastInput& input) const {
  check_input(input);
  return forward_window(weights(), norm_.normalize(input.older), norm_.normalize(input.newer), config_.output);
}

Eigen::VectorXd RtpnnModel::forecast_window(const ForecastInput& input) const {
  Eigen::VectorXd y = forecast_normalized(input);
  for (Eigen::Index s = 0; s < y.size(); ++s) y(s) = std::max(0.0, norm_.denormalize(0, y(s)));
  return y;
}

double RtpnnModel::window_loss(const TrainingWindow& window) const {
  check_input(window.input);
  const Eigen::VectorXd target = (window.target.array() - norm_.min(0)) / norm_.range(0);
  return window_objective(weights(), norm_.normalize(window.input.older), norm_.normalize(window.input.newer), target,
                          config_.output, config_.l2);
}

nn::GradMap RtpnnModel::window_gradients(const TrainingWindow& window) const {
  check_input(window.input);
  ad::Tape tape;
  nn::ParamBinding binding(params_, tape);
  const Eigen::VectorXd target = (window.target.array() - norm_.min(0)) / norm_.range(0);
  const ad::Var loss = window_objective(bind(binding), norm_.normalize(window.input.older),
                                        norm_.normalize(window.input.newer), target, config_.output, config_.l2);
  return nn::backprop(tape, loss, binding);
}

nn::Checkpoint RtpnnModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.meta["model"] = "rtpnn";
  ck.meta["features"] = std::to_string(features_);
  ck.meta["l2"] = nn::format_double(config_.l2);
  ck.meta["output_activation"] = std::string(nn::to_string(config_.output));
  ck.meta["seed"] = std::to_string(config_.seed);
  for (const auto& [name, e] : params_.entries()) ck.params.add(name, e.value, e.rank);
  ck.params.add_vector("norm.min", norm_.min);
  ck.params.add_vector("norm.max", norm_.max);
  return ck;
}

RtpnnModel RtpnnModel::from_checkpoint(const nn::Checkpoint& ck) {
  auto get_meta = [&ck](const std::string& key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw DataError("rtpnn checkpoint: missing meta '" + key + "'");
    return it->second;
  };
  if (get_meta("model") != "rtpnn") throw DataError("checkpoint is not an rtpnn model");
  RtpnnConfig cfg;
  cfg.l2 = std::stod(get_meta("l2"));
  cfg.output = nn::parse_activation(get_meta("output_activation"));
  cfg.seed = std::stoull(get_meta("seed"));
  RtpnnModel model(std::stoi(get_meta("features")), cfg);
  for (const auto& name : model.params_.names()) {
    const auto& src = ck.params.get(name);
    auto& dst = model.params_.get(name);
    if (src.rows() != dst.rows() || src.cols() != dst.cols())
      throw ShapeError("rtpnn checkpoint: tensor '" + name + "' has wrong shape");
    dst = src;
  }
  model.set_normalizer({ck.params.get("norm.min").col(0), ck.params.get("norm.max").col(0)});
  return model;
}

Stage1Result stage1_train(RtpnnModel& model, std::span<const TrainingWindow> train, const Stage1Config& config) {
  if (train.empty()) throw DataError("stage 1: no training windows");
  if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("stage 1: epochs >= 0 and batch_size >= 1 required");
  model.set_normalizer(Normalizer::fit(train));
  const auto S = train.front().input.slots();
  const std::size_t per_batch = std::max<std::size_t>(1, static_cast<std::size_t>(config.batch_size / std::max<Eigen::Index>(S, 1)));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  // Pre-normalise once; the normaliser is fixed for the whole run.
  const Normalizer& norm = model.normalizer();
  std::vector<Eigen::MatrixXd> older(train.size()), newer(train.size());
  std::vector<Eigen::VectorXd> target(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].target.size() != S || train[i].input.slots() != S)
      throw ShapeError("stage 1: window " + std::to_string(i) + " has a different slot count");
    older[i] = norm.normalize(train[i].input.older);
    newer[i] = norm.normalize(train[i].input.newer);
    target[i] = (train[i].target.array() - norm.min(0)) / norm.range(0);
  }

  Stage1Result result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_mse = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += per_batch, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + per_batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      nn::GradMap grads;
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        ad::Tape tape;
        tape.reserve(static_cast<std::size_t>(S) * 64 * static_cast<std::size_t>(model.series()));
        nn::ParamBinding binding(model.params(), tape);
        const auto w = model.bind(binding);
        const ad::Var loss = window_objective(w, older[i], newer[i], target[i], model.config().output, 0.0);
        batch_loss += loss.value() * inv;
        auto g = nn::backprop(tape, loss, binding, inv);
        if (grads.empty())
          grads = std::move(g);
        else
          for (auto& [name, m] : g) grads[name] += m;
      }
      // L2 on the DP scalars, once per batch
      const double l2 = model.config().l2;
      for (const auto& name : kDpNames) grads[name] += 2.0 * l2 * model.params().get(name);
      if (!std::isfinite(batch_loss))
        throw TrainingError("stage 1: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      epoch_mse += batch_loss * static_cast<double>(end - start);
      nn::adam_step(model.params(), grads, config.lr, config.adam);
    }
    result.loss_history.push_back(epoch_mse / static_cast<double>(order.size()));
  }
  return result;
}

std::string forecast_csv(const ForecastInput& input, const Eigen::VectorXd& forecast) {
  std::ostringstream os;
  os << "timestamp,gen_forecast_kw\n";
  for (Eigen::Index s = 0; s < forecast.size(); ++s) {
    const auto idx = static_cast<std::size_t>(s);
    os << (idx < input.timestamps.size() ? format_timestamp(input.timestamps[idx]) : std::to_string(s + 1)) << ',' << nn::format_double(forecast(s)) << '\n';
  }
  return os.str();
}

}  // namespace fes::rtpnn
