#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "common.hpp"

namespace gasopt::ad {

// Reverse-mode tape over scalars. Nodes carry only their input edges
// (parent id + local partial); values live in the Rev handles. Selection ops
// (max/min/branching) pick an input instead of recording a node, which bakes
// in the subgradient convention: the gradient flows to the active argument
// only, and regime switches are decided at value level.
class Tape {
 public:
  int leaf(double) {
    edge_begin_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return static_cast<int>(edge_begin_.size()) - 1;
  }

  int unary(int p, double dp) {
    edge_begin_.push_back(static_cast<std::uint32_t>(parent_.size()));
    parent_.push_back(static_cast<std::uint32_t>(p));
    partial_.push_back(dp);
    return static_cast<int>(edge_begin_.size()) - 1;
  }

  int binary(int p0, double d0, int p1, double d1) {
    edge_begin_.push_back(static_cast<std::uint32_t>(parent_.size()));
    parent_.push_back(static_cast<std::uint32_t>(p0));
    partial_.push_back(d0);
    parent_.push_back(static_cast<std::uint32_t>(p1));
    partial_.push_back(d1);
    return static_cast<int>(edge_begin_.size()) - 1;
  }

  // n-ary builder: queue edges, then commit them as one node.
  void push_edge(int p, double dp) {
    scratch_parent_.push_back(static_cast<std::uint32_t>(p));
    scratch_partial_.push_back(dp);
  }
  int commit() {
    edge_begin_.push_back(static_cast<std::uint32_t>(parent_.size()));
    parent_.insert(parent_.end(), scratch_parent_.begin(), scratch_parent_.end());
    partial_.insert(partial_.end(), scratch_partial_.begin(), scratch_partial_.end());
    scratch_parent_.clear();
    scratch_partial_.clear();
    return static_cast<int>(edge_begin_.size()) - 1;
  }

  int size() const { return static_cast<int>(edge_begin_.size()); }

  void reset() {
    edge_begin_.clear();
    parent_.clear();
    partial_.clear();
    scratch_parent_.clear();
    scratch_partial_.clear();
  }

  // Seeds d(out)=1 and accumulates adjoints into every node; read them back
  // with adjoint(). Running it twice on the same tape gives identical values.
  void backward(int out) {
    adjoint_.assign(edge_begin_.size(), 0.0);
    adjoint_[out] = 1.0;
    for (int i = out; i >= 0; --i) {
      double a = adjoint_[i];
      if (a == 0.0) continue;
      std::uint32_t begin = edge_begin_[i];
      std::uint32_t end = i + 1 < static_cast<int>(edge_begin_.size())
                              ? edge_begin_[i + 1]
                              : static_cast<std::uint32_t>(parent_.size());
      for (std::uint32_t e = begin; e < end; ++e) adjoint_[parent_[e]] += a * partial_[e];
    }
  }

  double adjoint(int id) const { return adjoint_[id]; }

 private:
  std::vector<std::uint32_t> edge_begin_;
  std::vector<std::uint32_t> parent_;
  std::vector<double> partial_;
  std::vector<double> adjoint_;
  std::vector<std::uint32_t> scratch_parent_;
  std::vector<double> scratch_partial_;
};

// Value with an optional tape node. id < 0 means "constant": it takes part in
// arithmetic but receives no gradient.
struct Rev {
  Tape* tape = nullptr;
  int id = -1;
  double v = 0.0;

  Rev() = default;
  Rev(Tape* t, int node, double value) : tape(t), id(node), v(value) {}

  static Rev constant(double value) { return Rev(nullptr, -1, value); }
  static Rev leaf(Tape& t, double value) { return Rev(&t, t.leaf(value), value); }

  double val() const { return v; }
  bool is_const() const { return id < 0; }
};

inline double val(double x) { return x; }
inline double val(const Rev& x) { return x.v; }

inline Rev operator+(const Rev& a, const Rev& b) {
  if (a.is_const() && b.is_const()) return Rev::constant(a.v + b.v);
  if (a.is_const()) return Rev(b.tape, b.id, a.v + b.v);  // shift keeps the same node
  if (b.is_const()) return Rev(a.tape, a.id, a.v + b.v);
  return Rev(a.tape, a.tape->binary(a.id, 1.0, b.id, 1.0), a.v + b.v);
}
inline Rev operator+(const Rev& a, double c) {
  return a.is_const() ? Rev::constant(a.v + c) : Rev(a.tape, a.id, a.v + c);
}
inline Rev operator+(double c, const Rev& a) { return a + c; }

inline Rev operator-(const Rev& a) {
  if (a.is_const()) return Rev::constant(-a.v);
  return Rev(a.tape, a.tape->unary(a.id, -1.0), -a.v);
}
inline Rev operator-(const Rev& a, const Rev& b) {
  if (a.is_const() && b.is_const()) return Rev::constant(a.v - b.v);
  if (b.is_const()) return Rev(a.tape, a.id, a.v - b.v);
  if (a.is_const()) return Rev(b.tape, b.tape->unary(b.id, -1.0), a.v - b.v);
  return Rev(a.tape, a.tape->binary(a.id, 1.0, b.id, -1.0), a.v - b.v);
}
inline Rev operator-(const Rev& a, double c) { return a + (-c); }
inline Rev operator-(double c, const Rev& a) {
  if (a.is_const()) return Rev::constant(c - a.v);
  return Rev(a.tape, a.tape->unary(a.id, -1.0), c - a.v);
}

inline Rev operator*(const Rev& a, const Rev& b) {
  if (a.is_const() && b.is_const()) return Rev::constant(a.v * b.v);
  if (a.is_const()) return Rev(b.tape, b.tape->unary(b.id, a.v), a.v * b.v);
  if (b.is_const()) return Rev(a.tape, a.tape->unary(a.id, b.v), a.v * b.v);
  return Rev(a.tape, a.tape->binary(a.id, b.v, b.id, a.v), a.v * b.v);
}
inline Rev operator*(const Rev& a, double c) {
  if (a.is_const()) return Rev::constant(a.v * c);
  return Rev(a.tape, a.tape->unary(a.id, c), a.v * c);
}
inline Rev operator*(double c, const Rev& a) { return a * c; }

// max/min select the active input; ties go to the second argument, so call
// sites pass the storage-level term second.
inline Rev smax(const Rev& a, const Rev& b) { return a.v > b.v ? a : b; }
inline Rev smin(const Rev& a, const Rev& b) { return a.v < b.v ? a : b; }
inline Rev smax(double c, const Rev& b) { return c > b.v ? Rev::constant(c) : b; }
inline Rev smin(double c, const Rev& b) { return c < b.v ? Rev::constant(c) : b; }
inline double smax(double a, double b) { return a > b ? a : b; }
inline double smin(double a, double b) { return a < b ? a : b; }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}
inline Rev sigmoid(const Rev& a) {
  double s = sigmoid(a.v);
  if (a.is_const()) return Rev::constant(s);
  return Rev(a.tape, a.tape->unary(a.id, s * (1.0 - s)), s);
}

// exp with linear tails beyond |x| = 20: keeps utilities finite and their
// gradients bounded when a candidate policy produces extreme wealth. The
// tails preserve monotonicity; the trainer records when they engage.
constexpr double kExpClamp = 20.0;
inline double exp_clamped(double x) {
  if (x > kExpClamp) return std::exp(kExpClamp) * (x - (kExpClamp - 1.0));
  if (x < -kExpClamp) return std::exp(-kExpClamp) * (x + (kExpClamp + 1.0));
  return std::exp(x);
}
inline double exp_clamped_slope(double x) {
  if (x > kExpClamp) return std::exp(kExpClamp);
  if (x < -kExpClamp) return std::exp(-kExpClamp);
  return std::exp(x);
}
inline Rev exp_clamped(const Rev& a) {
  double v = exp_clamped(a.v);
  if (a.is_const()) return Rev::constant(v);
  return Rev(a.tape, a.tape->unary(a.id, exp_clamped_slope(a.v)), v);
}

// |x| with derivative sign(x) and 0 at the kink.
inline double sabs(double x) { return std::abs(x); }
inline Rev sabs(const Rev& a) {
  if (a.is_const()) return Rev::constant(std::abs(a.v));
  double d = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return Rev(a.tape, a.tape->unary(a.id, d), std::abs(a.v));
}

// Fused affine row: sum_i w[i]*x[i] + b as a single node. Weights are tape
// leaves; features may be constants (only live inputs get edges).
Rev affine_row(std::span<const Rev> w, std::span<const Rev> x, const Rev& b);
double affine_row(std::span<const double> w, std::span<const double> x, double b);

}  // namespace gasopt::ad
