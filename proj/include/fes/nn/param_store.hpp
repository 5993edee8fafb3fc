#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fes/nn/autodiff.hpp"

namespace fes::nn {

using GradMap = std::map<std::string, Eigen::MatrixXd>;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global L2-norm clip over all gradients of one update, if set.
  std::optional<double> max_grad_norm;
};

/// Named parameter tensors with their Adam moment buffers.
///
/// Rank-1 tensors are stored as column vectors. The optimiser step counter is
/// shared by every tensor in the store.
class ParamStore {
 public:
  struct Entry {
    Eigen::MatrixXd value;
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
    int rank = 2;
  };

  void add(const std::string& name, Eigen::MatrixXd value, int rank = 2);
  void add_vector(const std::string& name, const Eigen::VectorXd& value) { add(name, value, 1); }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Eigen::MatrixXd& get(const std::string& name) const;
  Eigen::MatrixXd& get(const std::string& name);
  const Entry& entry(const std::string& name) const;
  int rank(const std::string& name) const { return entry(name).rank; }

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;
  long step() const noexcept { return step_; }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

 private:
  friend void adam_step(ParamStore&, const GradMap&, double, const AdamConfig&);

  std::map<std::string, Entry> entries_;
  long step_ = 0;
};

/// One bias-corrected Adam update. Tensors missing from `grads` keep their
/// values and moments untouched; the step counter advances once per call.
void adam_step(ParamStore& store, const GradMap& grads, double lr, const AdamConfig& config = {});

/// Parameters recorded as leaves on a tape.
class ParamBinding {
 public:
  ParamBinding(const ParamStore& store, ad::Tape& tape, const std::vector<std::string>& names);
  ParamBinding(const ParamStore& store, ad::Tape& tape);

  const Mat<ad::Var>& operator[](const std::string& name) const;
  const std::map<std::string, Mat<ad::Var>>& vars() const noexcept { return vars_; }

 private:
  std::map<std::string, Mat<ad::Var>> vars_;
};

/// Gradients of every bound parameter from adjoints of a finished sweep.
GradMap collect_gradients(const ParamBinding& binding, const std::vector<double>& adjoints);

/// Sweeps `tape` backward from `loss` (seeded with `loss_grad`) and returns
/// d(loss)/d(theta) for every bound parameter.
GradMap backprop(ad::Tape& tape, const ad::Var& loss, const ParamBinding& binding, double loss_grad = 1.0);

/// Vector-valued variant: each output is seeded with its own upstream gradient.
GradMap backprop(ad::Tape& tape, const std::vector<ad::Var>& outputs, const std::vector<double>& loss_grad,
                 const ParamBinding& binding);

/// Order-independent 64-bit digest of every tensor's bytes.
std::uint64_t checksum(const ParamStore& store);

}  // namespace fes::nn
