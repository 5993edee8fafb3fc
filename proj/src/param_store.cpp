#include "fes/nn/param_store.hpp"

#include <cmath>
#include <cstring>

namespace fes::nn {

void ParamStore::add(const std::string& name, Eigen::MatrixXd value, int rank) {
  if (rank != 1 && rank != 2) throw ShapeError("parameter '" + name + "': rank must be 1 or 2");
  if (rank == 1 && value.cols() != 1) throw ShapeError("parameter '" + name + "': rank-1 tensor must be a column");
  Entry e;
  e.m = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  e.v = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  e.value = std::move(value);
  e.rank = rank;
  entries_[name] = std::move(e);
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

const Eigen::MatrixXd& ParamStore::get(const std::string& name) const { return entry(name).value; }

Eigen::MatrixXd& ParamStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second.value;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void adam_step(ParamStore& store, const GradMap& grads, double lr, const AdamConfig& config) {
  double scale = 1.0;
  for (const auto& [name, g] : grads) {
    const auto& e = store.entry(name);
    if (g.rows() != e.value.rows() || g.cols() != e.value.cols())
      throw ShapeError("gradient for '" + name + "' has shape " + std::to_string(g.rows()) + "x" +
                       std::to_string(g.cols()) + ", parameter is " + std::to_string(e.value.rows()) + "x" +
                       std::to_string(e.value.cols()));
    if (!g.allFinite()) throw TrainingError("non-finite gradient for parameter '" + name + "'");
  }
  if (config.max_grad_norm) {
    double sq = 0.0;
    for (const auto& [_, g] : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > *config.max_grad_norm) scale = *config.max_grad_norm / norm;
  }

  ++store.step_;
  const double t = static_cast<double>(store.step_);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, g_raw] : grads) {
    auto& e = store.entries_.at(name);
    const Eigen::MatrixXd g = g_raw * scale;
    e.m = config.beta1 * e.m + (1.0 - config.beta1) * g;
    e.v = config.beta2 * e.v + (1.0 - config.beta2) * g.cwiseAbs2();
    const Eigen::ArrayXXd m_hat = e.m.array() / bc1;
    const Eigen::ArrayXXd v_hat = e.v.array() / bc2;
    e.value.array() -= lr * m_hat / (v_hat.sqrt() + config.eps);
  }
}

ParamBinding::ParamBinding(const ParamStore& store, ad::Tape& tape, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    const auto& value = store.get(name);
    Mat<ad::Var> m(value.rows(), value.cols());
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) m(i, j) = ad::Var::leaf(tape, value(i, j));
    vars_.emplace(name, std::move(m));
  }
}

ParamBinding::ParamBinding(const ParamStore& store, ad::Tape& tape) : ParamBinding(store, tape, store.names()) {}

const Mat<ad::Var>& ParamBinding::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ShapeError("parameter '" + name + "' is not bound to the tape");
  return it->second;
}

GradMap collect_gradients(const ParamBinding& binding, const std::vector<double>& adjoints) {
  GradMap out;
  for (const auto& [name, m] : binding.vars()) {
    Eigen::MatrixXd g(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) g(i, j) = adjoints[static_cast<std::size_t>(m(i, j).index())];
    out.emplace(name, std::move(g));
  }
  return out;
}

GradMap backprop(ad::Tape& tape, const ad::Var& loss, const ParamBinding& binding, double loss_grad) {
  const std::pair<std::int32_t, double> seed{loss.index(), loss_grad};
  return collect_gradients(binding, tape.backward(std::span(&seed, 1)));
}

GradMap backprop(ad::Tape& tape, const std::vector<ad::Var>& outputs, const std::vector<double>& loss_grad,
                 const ParamBinding& binding) {
  if (outputs.size() != loss_grad.size())
    throw ShapeError("backprop: " + std::to_string(outputs.size()) + " outputs but " +
                     std::to_string(loss_grad.size()) + " upstream gradients");
  std::vector<std::pair<std::int32_t, double>> seeds;
  seeds.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) seeds.emplace_back(outputs[i].index(), loss_grad[i]);
  return collect_gradients(binding, tape.backward(seeds));
}

std::uint64_t checksum(const ParamStore& store) {
  // FNV-1a over names and raw values; map iteration order is sorted.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, e] : store.entries()) {
    mix(name.data(), name.size());
    mix(e.value.data(), sizeof(double) * static_cast<std::size_t>(e.value.size()));
  }
  return h;
}

}  // namespace fes::nn
