#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A `Var` is either a constant (no tape) or a node on a `Tape`. Every
// primitive records at most two parents together with the local partial
// derivatives, so the backward sweep is a single reverse pass over the node
// array. `Var` is registered as an Eigen scalar, which lets the dense-layer
// code be written once as a template and instantiated for `double` (inference)
// and `Var` (training).

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fes/errors.hpp"

namespace fes::ad {

class Tape {
 public:
  struct Node {
    std::int32_t parent[2];
    double partial[2];
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::int32_t push(std::int32_t p0, double d0, std::int32_t p1, double d1) {
    nodes_.push_back(Node{{p0, p1}, {d0, d1}});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }
  std::int32_t push_leaf() { return push(-1, 0.0, -1, 0.0); }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Reverse sweep. `seeds` pairs a node index with d(loss)/d(node).
  /// Returns the adjoint of every node. A tape can be swept once.
  std::vector<double> backward(std::span<const std::pair<std::int32_t, double>> seeds) {
    if (consumed_) throw UsageError("tape already consumed by a previous backward pass");
    consumed_ = true;
    std::vector<double> adj(nodes_.size(), 0.0);
    for (const auto& [idx, seed] : seeds) {
      if (idx >= 0) adj[static_cast<std::size_t>(idx)] += seed;
    }
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.parent[0] >= 0) adj[static_cast<std::size_t>(n.parent[0])] += a * n.partial[0];
      if (n.parent[1] >= 0) adj[static_cast<std::size_t>(n.parent[1])] += a * n.partial[1];
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT: implicit constants are the point

  static Var leaf(Tape& tape, double v) { return Var(&tape, tape.push_leaf(), v); }

  double value() const noexcept { return value_; }
  std::int32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }
  Var& operator/=(const Var& o) { return *this = *this / o; }

  friend Var unary(const Var& x, double value, double dx) {
    if (x.is_constant()) return Var(value);
    return Var(x.tape_, x.tape_->push(x.index_, dx, -1, 0.0), value);
  }

  friend Var binary(const Var& a, const Var& b, double value, double da, double db) {
    if (a.is_constant() && b.is_constant()) return Var(value);
    if (a.is_constant()) return Var(b.tape_, b.tape_->push(b.index_, db, -1, 0.0), value);
    if (b.is_constant()) return Var(a.tape_, a.tape_->push(a.index_, da, -1, 0.0), value);
    return Var(a.tape_, a.tape_->push(a.index_, da, b.index_, db), value);
  }

  friend Var operator+(const Var& a, const Var& b) { return binary(a, b, a.value_ + b.value_, 1.0, 1.0); }
  friend Var operator-(const Var& a, const Var& b) { return binary(a, b, a.value_ - b.value_, 1.0, -1.0); }
  friend Var operator*(const Var& a, const Var& b) {
    return binary(a, b, a.value_ * b.value_, b.value_, a.value_);
  }
  friend Var operator/(const Var& a, const Var& b) {
    const double q = a.value_ / b.value_;
    return binary(a, b, q, 1.0 / b.value_, -q / b.value_);
  }
  friend Var operator-(const Var& a) { return unary(a, -a.value_, -1.0); }
  friend Var operator+(const Var& a) { return a; }

  friend bool operator<(const Var& a, const Var& b) { return a.value_ < b.value_; }
  friend bool operator>(const Var& a, const Var& b) { return a.value_ > b.value_; }
  friend bool operator<=(const Var& a, const Var& b) { return a.value_ <= b.value_; }
  friend bool operator>=(const Var& a, const Var& b) { return a.value_ >= b.value_; }
  friend bool operator==(const Var& a, const Var& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Var& a, const Var& b) { return a.value_ != b.value_; }

 private:
  Var(Tape* tape, std::int32_t index, double v) : tape_(tape), index_(index), value_(v) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

inline double value_of(double x) noexcept { return x; }
inline double value_of(const Var& x) noexcept { return x.value(); }

// Elementary functions, overloaded for double so templated code can call
// `ad::exp(x)` uniformly.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::abs(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

inline Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return unary(x, e, e);
}
inline Var log(const Var& x) { return unary(x, std::log(x.value()), 1.0 / x.value()); }
inline Var sqrt(const Var& x) {
  const double r = std::sqrt(x.value());
  return unary(x, r, 0.5 / r);
}
inline Var abs(const Var& x) { return unary(x, std::abs(x.value()), x.value() < 0.0 ? -1.0 : 1.0); }
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return unary(x, t, 1.0 - t * t);
}
inline Var sigmoid(const Var& x) {
  const double s = sigmoid(x.value());
  return unary(x, s, s * (1.0 - s));
}
inline Var softplus(const Var& x) { return unary(x, softplus(x.value()), sigmoid(x.value())); }

// Hooks Eigen looks up by ADL.
inline const Var& conj(const Var& x) { return x; }
inline const Var& real(const Var& x) { return x; }
inline Var imag(const Var&) { return Var(0.0); }
inline Var abs2(const Var& x) { return x * x; }

}  // namespace fes::ad

namespace Eigen {

template <>
struct NumTraits<fes::ad::Var> : NumTraits<double> {
  using Real = fes::ad::Var;
  using NonInteger = fes::ad::Var;
  using Nested = fes::ad::Var;
  using Literal = fes::ad::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};

}  // namespace Eigen

namespace fes {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace fes
