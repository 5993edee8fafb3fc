#include "fes/scheduling/scheduling_layer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fes/data/appliances.hpp"
#include "fes/errors.hpp"
#include "fes/sched/constraints.hpp"
#include "fes/time.hpp"

namespace fes::scheduling {

namespace {

template <typename Scalar>
std::array<const Mat<Scalar>*, 6> param_refs(const std::array<Mat<Scalar>, 6>& m) {
  return {&m[0], &m[1], &m[2], &m[3], &m[4], &m[5]};
}

std::array<Mat<ad::Var>, 6> bind_heads(const nn::ParamBinding& binding) {
  std::array<Mat<ad::Var>, 6> out;
  for (std::size_t k = 0; k < 6; ++k) out[k] = binding[head_param_name(kHeadInputs[k])];
  return out;
}

std::array<const Mat<double>*, 6> head_refs(const FesModel& model) {
  std::array<const Mat<double>*, 6> out{};
  for (std::size_t k = 0; k < 6; ++k) out[k] = &model.head_params().get(head_param_name(kHeadInputs[k]));
  return out;
}

void check_model_scenario(const FesModel& model, const Eigen::VectorXd& forecast, const ScenarioWindow& scenario) {
  if (static_cast<Eigen::Index>(scenario.device_count()) != model.devices() || scenario.slots != model.slots())
    throw ShapeError("scheduling layer built for " + std::to_string(model.devices()) + " devices x " +
                     std::to_string(model.slots()) + " slots, scenario has " +
                     std::to_string(scenario.device_count()) + " x " + std::to_string(scenario.slots));
  if (forecast.size() != scenario.slots)
    throw ShapeError("forecast has " + std::to_string(forecast.size()) + " slots, scenario " +
                     std::to_string(scenario.slots));
}

// sum over devices of -log softmax(logits_n)[label_n]
template <typename Scalar>
Scalar window_cce(const std::array<const Mat<Scalar>*, 6>& heads, const ScenarioWindow& scenario,
                  const std::vector<int>& label) {
  Scalar total(0.0);
  for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(scenario.device_count()); ++n) {
    const Vec<Scalar> a = slot_scores<Scalar>(heads, scenario.generation, scenario, n);
    double m = ad::value_of(a(0));
    for (Eigen::Index s = 1; s < a.size(); ++s) m = std::max(m, ad::value_of(a(s)));
    Scalar z(0.0);
    for (Eigen::Index s = 0; s < a.size(); ++s) z += ad::exp(a(s) - Scalar(m));
    total += ad::log(z) + Scalar(m) - a(label[static_cast<std::size_t>(n)]);
  }
  return total;
}

std::vector<int> label_starts(const Schedule& label, const ScenarioWindow& scenario) {
  if (label.devices() != static_cast<Eigen::Index>(scenario.device_count()) || label.slots() != scenario.slots)
    throw DataError("stage 2: label shape does not match scenario");
  std::vector<int> out(scenario.device_count(), -1);
  for (Eigen::Index n = 0; n < label.devices(); ++n) {
    int ones = 0;
    for (Eigen::Index s = 0; s < label.slots(); ++s) {
      const int v = label.matrix()(n, s);
      if (v != 0 && v != 1) throw DataError("stage 2: label row " + std::to_string(n) + " is not binary");
      if (v == 1) {
        ++ones;
        out[static_cast<std::size_t>(n)] = static_cast<int>(s);
      }
    }
    if (ones != 1) throw DataError("stage 2: label row " + std::to_string(n) + " is not one-hot");
  }
  return out;
}

}  // namespace

std::string head_param_name(HeadInput k) {
  switch (k) {
    case HeadInput::Generation: return "head.w_generation";
    case HeadInput::Battery: return "head.w_battery";
    case HeadInput::Cost: return "head.w_cost";
    case HeadInput::Power: return "head.w_power";
    case HeadInput::Inverter: return "head.w_inverter";
    case HeadInput::BatteryMax: return "head.w_battery_max";
  }
  return "head.unknown";
}

FesModel::FesModel(rtpnn::RtpnnModel forecaster, std::vector<std::string> device_names, int slots)
    : forecaster_(std::move(forecaster)), device_names_(std::move(device_names)), slots_(slots) {
  if (slots < 1) throw ParameterError("scheduling layer: slots must be >= 1");
  // free parameter 0 -> effective weight ln 2 for every input
  for (auto k : kHeadInputs) heads_.add(head_param_name(k), Eigen::MatrixXd::Zero(devices(), slots));
}

Eigen::MatrixXd FesModel::effective_weights(HeadInput k) const {
  return heads_.get(head_param_name(k)).unaryExpr([](double v) { return ad::softplus(v); });
}

nn::Checkpoint FesModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.meta["model"] = "fes";
  ck.meta["slots"] = std::to_string(slots_);
  ck.meta["devices"] = std::to_string(device_names_.size());
  for (std::size_t n = 0; n < device_names_.size(); ++n) ck.meta["device." + std::to_string(n)] = device_names_[n];
  ck.meta["forecaster_checksum"] = std::to_string(nn::checksum(forecaster_.params()));
  for (const auto& [name, e] : heads_.entries()) ck.params.add(name, e.value, e.rank);
  return ck;
}

FesModel FesModel::from_checkpoint(const nn::Checkpoint& ck, const rtpnn::RtpnnModel& forecaster) {
  auto get_meta = [&ck](const std::string& key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw DataError("fes checkpoint: missing meta '" + key + "'");
    return it->second;
  };
  if (get_meta("model") != "fes") throw DataError("checkpoint is not a scheduling-layer model");
  if (get_meta("forecaster_checksum") != std::to_string(nn::checksum(forecaster.params())))
    throw DataError("fes checkpoint was trained against a different forecaster");
  const auto n_dev = std::stoul(get_meta("devices"));
  std::vector<std::string> names;
  for (std::size_t n = 0; n < n_dev; ++n) names.push_back(get_meta("device." + std::to_string(n)));
  FesModel model(forecaster, std::move(names), std::stoi(get_meta("slots")));
  for (auto k : kHeadInputs) {
    const auto name = head_param_name(k);
    const auto& src = ck.params.get(name);
    auto& dst = model.heads_.get(name);
    if (src.rows() != dst.rows() || src.cols() != dst.cols())
      throw ShapeError("fes checkpoint: tensor '" + name + "' has wrong shape");
    dst = src;
  }
  return model;
}

template <typename Scalar>
Vec<Scalar> slot_scores(const std::array<const Mat<Scalar>*, 6>& free_params, const Eigen::VectorXd& forecast,
                        const ScenarioWindow& scenario, Eigen::Index n) {
  const auto& dev = scenario.devices[static_cast<std::size_t>(n)];
  const Eigen::VectorXd cost = data::cap_infinite(dev.cost);
  const double b_per_slot = scenario.battery_kwh / scenario.slots;
  Vec<Scalar> out(scenario.slots);
  for (Eigen::Index s = 0; s < scenario.slots; ++s) {
    auto w = [&](HeadInput k) { return ad::softplus((*free_params[static_cast<std::size_t>(k)])(n, s)); };
    out(s) = w(HeadInput::Generation) * Scalar(forecast(s)) + w(HeadInput::Battery) * Scalar(b_per_slot) -
             w(HeadInput::Cost) * Scalar(cost(s)) - w(HeadInput::Power) * Scalar(dev.power_kw) -
             w(HeadInput::Inverter) * Scalar(scenario.inverter_kw) -
             w(HeadInput::BatteryMax) * Scalar(scenario.battery_max_kwh);
  }
  return out;
}

template Vec<double> slot_scores<double>(const std::array<const Mat<double>*, 6>&, const Eigen::VectorXd&,
                                         const ScenarioWindow&, Eigen::Index);
template Vec<ad::Var> slot_scores<ad::Var>(const std::array<const Mat<ad::Var>*, 6>&, const Eigen::VectorXd&,
                                           const ScenarioWindow&, Eigen::Index);

Eigen::VectorXd slot_scores(const FesModel& model, const Eigen::VectorXd& forecast, const ScenarioWindow& scenario,
                            Eigen::Index n) {
  check_model_scenario(model, forecast, scenario);
  return slot_scores<double>(head_refs(model), forecast, scenario, n);
}

SoftSchedule soft_schedule(const FesModel& model, const Eigen::VectorXd& forecast, const ScenarioWindow& scenario) {
  check_model_scenario(model, forecast, scenario);
  const auto heads = head_refs(model);
  SoftSchedule out{Eigen::MatrixXd(model.devices(), scenario.slots)};
  for (Eigen::Index n = 0; n < model.devices(); ++n) {
    const Eigen::VectorXd a = slot_scores<double>(heads, forecast, scenario, n);
    const Eigen::ArrayXd e = (a.array() - a.maxCoeff()).exp();
    out.x.row(n) = (e / e.sum()).transpose();
  }
  return out;
}

Schedule decode(const SoftSchedule& soft, const ScenarioWindow& scenario) {
  const std::size_t N = scenario.device_count();
  if (soft.x.rows() != static_cast<Eigen::Index>(N) || soft.x.cols() != scenario.slots)
    throw ShapeError("decode: soft schedule shape does not match scenario");
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&scenario](std::size_t a, std::size_t b) {
    const auto& da = scenario.devices[a];
    const auto& db = scenario.devices[b];
    return da.power_kw * da.duration > db.power_kw * db.duration;
  });

  LoadTracker tracker(scenario);
  std::vector<int> starts(N, -1);
  std::vector<int> slots(static_cast<std::size_t>(scenario.slots));
  for (std::size_t n : order) {
    std::iota(slots.begin(), slots.end(), 0);
    const auto row = soft.x.row(static_cast<Eigen::Index>(n));
    std::stable_sort(slots.begin(), slots.end(), [&row](int a, int b) { return row(a) > row(b); });
    for (int s : slots) {
      if (tracker.can_place(n, s)) {
        tracker.place(n, s);
        starts[n] = s;
        break;
      }
    }
    if (starts[n] < 0)
      throw InfeasibleError(n, "decode: no feasible start for device " + std::to_string(n) + " ('" +
                                   scenario.devices[n].name + "')");
  }
  return Schedule::from_starts(starts, scenario.slots);
}

Inference infer(const FesModel& model, const rtpnn::ForecastInput& input, ScenarioWindow scenario) {
  Inference out;
  out.forecast = model.forecaster().forecast_window(input);
  if (out.forecast.size() != scenario.slots)
    throw ShapeError("forecast window has " + std::to_string(out.forecast.size()) + " slots, scenario " +
                     std::to_string(scenario.slots));
  scenario.generation = out.forecast;
  out.soft = soft_schedule(model, out.forecast, scenario);
  out.schedule = decode(out.soft, scenario);
  return out;
}

double schedule_cce(const FesModel& model, const Stage2Window& window) {
  check_model_scenario(model, window.scenario.generation, window.scenario);
  return window_cce<double>(head_refs(model), window.scenario, label_starts(window.label, window.scenario));
}

Stage2Result stage2_train(FesModel& model, std::span<const Stage2Window> windows, const Stage2Config& config) {
  if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("stage 2: epochs >= 0 and batch_size >= 1 required");
  std::vector<std::vector<int>> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) {
    check_model_scenario(model, w.scenario.generation, w.scenario);
    labels.push_back(label_starts(w.label, w.scenario));
  }
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  const auto per_batch = static_cast<std::size_t>(config.batch_size);

  Stage2Result result;
  for (int epoch = 0; epoch < config.epochs && !windows.empty(); ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += per_batch, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + per_batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      nn::GradMap grads;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        ad::Tape tape;
        nn::ParamBinding binding(model.head_params(), tape);
        const auto bound = bind_heads(binding);
        const ad::Var loss = window_cce<ad::Var>(param_refs(bound), windows[i].scenario, labels[i]);
        if (!std::isfinite(loss.value()))
          throw TrainingError("stage 2: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index));
        epoch_loss += loss.value();
        auto g = nn::backprop(tape, loss, binding, inv);
        if (grads.empty())
          grads = std::move(g);
        else
          for (auto& [name, m] : g) grads[name] += m;
      }
      nn::adam_step(model.head_params(), grads, config.lr, config.adam);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

std::string schedule_csv(const Schedule& schedule, const ScenarioWindow& scenario) {
  std::ostringstream os;
  os << "device_id,device_name,start_slot,start_time,duration_slots,power_kw\n";
  for (Eigen::Index n = 0; n < schedule.devices(); ++n) {
    const auto& d = scenario.devices[static_cast<std::size_t>(n)];
    const auto s = schedule.start(n);
    os << n + 1 << ',' << d.name << ',';
    if (s) {
      const auto hour = scenario.start_hour + static_cast<EpochHours>(std::llround(*s * scenario.slot_hours()));
      os << *s + 1 << ',' << format_timestamp(hour);
    } else {
      os << ',';
    }
    os << ',' << d.duration << ',' << nn::format_double(d.power_kw) << '\n';
  }
  return os.str();
}

std::string soft_schedule_csv(const SoftSchedule& soft, const ScenarioWindow& scenario) {
  std::ostringstream os;
  os << "device_id,device_name";
  for (Eigen::Index s = 0; s < soft.x.cols(); ++s) os << ",slot_" << s + 1;
  os << '\n';
  for (Eigen::Index n = 0; n < soft.x.rows(); ++n) {
    os << n + 1 << ',' << scenario.devices[static_cast<std::size_t>(n)].name;
    for (Eigen::Index s = 0; s < soft.x.cols(); ++s) os << ',' << nn::format_double(soft.x(n, s));
    os << '\n';
  }
  return os.str();
}

}  // namespace fes::scheduling
