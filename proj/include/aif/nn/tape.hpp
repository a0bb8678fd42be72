#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "aif/nn/fast_math.hpp"
#include "aif/nn/tensor.hpp"

namespace aif::nn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
  double item() const;
  double operator[](std::size_t i) const { return value().data[i]; }

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Parameter gradients produced by Tape::backward.
class Gradients {
 public:
  /// Gradient of `p`, or a zero tensor of its shape when `p` was not on the path to the loss.
  Tensor of(const Parameter& p) const;
  const Tensor* find(const Parameter& p) const;
  bool contains(const Parameter& p) const { return map_.contains(&p); }
  std::size_t size() const { return map_.size(); }

  void accumulate(const Parameter& p, const Tensor& g);

 private:
  std::unordered_map<const Parameter*, Tensor> map_;
};

/// Records primitive operations of a forward pass so their adjoints can be
/// replayed in reverse. Single-writer; parameters are only read.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::uint32_t> parents;
    Backward backward;
    const Parameter* param = nullptr;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var constant(std::span<const double> values);
  Var scalar(double value);
  /// Leaf bound to `p`; repeated calls return the same node.
  Var param(const Parameter& p);

  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);

  /// Reverse sweep from a scalar `loss`; returns gradients for every parameter leaf.
  Gradients backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  Node& node(std::uint32_t id) { return nodes_[id]; }
  /// Adjoint buffer of `id`, zero-initialized on first access during a sweep.
  Tensor& grad(std::uint32_t id);

 private:
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_ids_;
};

// Primitive differentiable ops. Shapes are checked; mismatches throw StructuralError.

/// W·x + b with W [out x in]; bias added first, then products in ascending column order.
Var affine(Var w, Var x, Var b);
/// W·x with the same accumulation order as affine, starting from zero.
Var matvec(Var w, Var x);
Var activate(Var x, Activation act);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
Var log(Var a);
Var exp(Var a);
Var concat(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
Var one_minus(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace aif::nn
