#include "aif/nn/tape.hpp"

#include <cmath>

#include "aif/error.hpp"

namespace aif::nn {

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::SiLU: return "silu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

const Tensor& Var::value() const { return tape_->node(id_).value; }

double Var::item() const {
  const Tensor& v = value();
  if (!v.is_scalar()) throw StructuralError("item() on non-scalar " + shape_string(v.shape));
  return v.data[0];
}

Tensor Gradients::of(const Parameter& p) const {
  if (const Tensor* g = find(p)) return *g;
  return Tensor(p.value.shape, 0.0);
}

const Tensor* Gradients::find(const Parameter& p) const {
  auto it = map_.find(&p);
  return it == map_.end() ? nullptr : &it->second;
}

void Gradients::accumulate(const Parameter& p, const Tensor& g) {
  auto [it, inserted] = map_.try_emplace(&p, g);
  if (!inserted) {
    for (std::size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
  }
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(std::span<const double> values) { return constant(Tensor::vector(values)); }

Var Tape::scalar(double value) { return constant(Tensor::scalar(value)); }

Var Tape::param(const Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, {}, {}, &p});
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (Var p : parents) {
    if (p.tape() != this) throw StructuralError("operand recorded on a different tape");
    n.parents.push_back(p.id());
  }
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape, 0.0);
  return n.grad;
}

Gradients Tape::backward(Var loss) {
  if (loss.tape() != this) throw StructuralError("loss was recorded on a different tape");
  if (!loss.value().is_scalar()) {
    throw StructuralError("backward needs a scalar loss, got " + shape_string(loss.value().shape));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad(loss.id()).data[0] = 1.0;

  Gradients out;
  for (std::int64_t id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.param) {
      out.accumulate(*n.param, n.grad);
    } else if (n.backward) {
      n.backward(*this, static_cast<std::uint32_t>(id));
    }
  }
  return out;
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.size() != b.size()) {
    throw StructuralError(std::string(op) + ": size mismatch " + shape_string(a.shape) + " vs " +
                          shape_string(b.shape));
  }
}

std::pair<std::size_t, std::size_t> matrix_dims(const Tensor& w, const Tensor& x, const char* op) {
  if (w.rank() != 2) throw StructuralError(std::string(op) + ": weight must be a matrix");
  if (w.shape[1] != x.size()) {
    throw StructuralError(std::string(op) + ": weight " + shape_string(w.shape) +
                          " cannot multiply input of size " + std::to_string(x.size()));
  }
  return {w.shape[0], w.shape[1]};
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw StructuralError("operation on an unbound Var");
  return *a.tape();
}

void matvec_backward(Tape& t, std::uint32_t self, std::uint32_t wid, std::uint32_t xid) {
  const Tensor& w = t.node(wid).value;
  const Tensor& x = t.node(xid).value;
  const std::vector<double> g = t.node(self).grad.data;
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  Tensor& gw = t.grad(wid);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) gw.data[i * cols + k] += g[i] * x.data[k];
  Tensor& gx = t.grad(xid);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) gx.data[k] += w.data[i * cols + k] * g[i];
}

template <class Fwd, class Slope>
Var unary(Var a, Fwd fwd, Slope slope) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = fwd(av.data[i]);
  const std::uint32_t aid = a.id();
  return t.record(std::move(out), {a}, [aid, slope](Tape& tp, std::uint32_t self) {
    const Tensor& x = tp.node(aid).value;
    const Tensor& y = tp.node(self).value;
    const std::vector<double> g = tp.node(self).grad.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g[i] * slope(x.data[i], y.data[i]);
  });
}

}  // namespace

Var affine(Var w, Var x, Var b) {
  Tape& t = tape_of(w);
  const auto [rows, cols] = matrix_dims(w.value(), x.value(), "affine");
  if (b.size() != rows) throw StructuralError("affine: bias size does not match weight rows");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bv.data[i];
    for (std::size_t k = 0; k < cols; ++k) acc += wv.data[i * cols + k] * xv.data[k];
    out.data[i] = acc;
  }
  const auto wid = w.id(), xid = x.id(), bid = b.id();
  return t.record(std::move(out), {w, x, b}, [wid, xid, bid](Tape& tp, std::uint32_t self) {
    matvec_backward(tp, self, wid, xid);
    const std::vector<double> g = tp.node(self).grad.data;
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g[i];
  });
}

Var matvec(Var w, Var x) {
  Tape& t = tape_of(w);
  const auto [rows, cols] = matrix_dims(w.value(), x.value(), "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < cols; ++k) acc += wv.data[i * cols + k] * xv.data[k];
    out.data[i] = acc;
  }
  const auto wid = w.id(), xid = x.id();
  return t.record(std::move(out), {w, x}, [wid, xid](Tape& tp, std::uint32_t self) {
    matvec_backward(tp, self, wid, xid);
  });
}

Var activate(Var x, Activation act) {
  if (act == Activation::Identity) return x;
  return unary(
      x, [act](double v) { return nn::activate(act, v); },
      [act](double v, double y) { return activation_slope(act, v, y); });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
  const auto aid = a.id(), bid = b.id();
  return t.record(std::move(out), {a, b}, [aid, bid](Tape& tp, std::uint32_t self) {
    const std::vector<double> g = tp.node(self).grad.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g[i];
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  const auto aid = a.id(), bid = b.id();
  return t.record(std::move(out), {a, b}, [aid, bid](Tape& tp, std::uint32_t self) {
    const std::vector<double> g = tp.node(self).grad.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g[i];
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  const auto aid = a.id(), bid = b.id();
  return t.record(std::move(out), {a, b}, [aid, bid](Tape& tp, std::uint32_t self) {
    const std::vector<double> g = tp.node(self).grad.data;
    const std::vector<double> av = tp.node(aid).value.data;
    const std::vector<double> bv = tp.node(bid).value.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g[i] * bv[i];
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g[i] * av[i];
  });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same(a.value(), b.value(), "div");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] /= b.value().data[i];
  const auto aid = a.id(), bid = b.id();
  return t.record(std::move(out), {a, b}, [aid, bid](Tape& tp, std::uint32_t self) {
    const std::vector<double> g = tp.node(self).grad.data;
    const std::vector<double> y = tp.node(self).value.data;
    const std::vector<double> bv = tp.node(bid).value.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g[i] / bv[i];
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g[i] * y[i] / bv[i];
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var square(Var a) {
  return unary(a, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var log(Var a) {
  return unary(a, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var exp(Var a) {
  return unary(a, [](double v) { return det_exp(v); }, [](double, double y) { return y; });
}

Var one_minus(Var a) {
  return unary(a, [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Var concat(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out({av.size() + bv.size()});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(av.size()));
  const auto aid = a.id(), bid = b.id();
  const std::size_t na = av.size();
  return t.record(std::move(out), {a, b}, [aid, bid, na](Tape& tp, std::uint32_t self) {
    const std::vector<double> g = tp.node(self).grad.data;
    Tensor& ga = tp.grad(aid);
    for (std::size_t i = 0; i < na; ++i) ga.data[i] += g[i];
    Tensor& gb = tp.grad(bid);
    for (std::size_t i = na; i < g.size(); ++i) gb.data[i - na] += g[i];
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double acc = 0.0;
  for (double v : a.value().data) acc += v;
  const auto aid = a.id();
  return t.record(Tensor::scalar(acc), {a}, [aid](Tape& tp, std::uint32_t self) {
    const double g = tp.node(self).grad.data[0];
    Tensor& ga = tp.grad(aid);
    for (double& v : ga.data) v += g;
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw StructuralError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

}  // namespace aif::nn
