#include "aif/nn/layers.hpp"

#include <cmath>

#include "aif/error.hpp"

namespace aif::nn {

namespace {

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data) v = dist(rng);
}

// bias + Σ_k W[i,k]·x[k], ascending k; matches affine() on the tape.
inline double row_affine(const double* w, const double* x, std::size_t cols, double acc) {
  for (std::size_t k = 0; k < cols; ++k) acc += w[k] * x[k];
  return acc;
}

}  // namespace

DenseLayer::DenseLayer(const std::string& name, std::size_t in, std::size_t out, Activation act)
    : weight{name + ".weight", Tensor({out, in})},
      bias{name + ".bias", Tensor({out})},
      in_(in),
      out_(out),
      act_(act) {}

void DenseLayer::init_uniform(std::mt19937_64& rng) {
  fill_uniform(weight.value, 1.0 / std::sqrt(static_cast<double>(in_)), rng);
  std::fill(bias.value.data.begin(), bias.value.data.end(), 0.0);
}

Var DenseLayer::forward(Tape& tape, Var x) const {
  if (x.size() != in_) {
    throw StructuralError(weight.name + ": expected input of size " + std::to_string(in_) + ", got " +
                          std::to_string(x.size()));
  }
  return activate(affine(tape.param(weight), x, tape.param(bias)), act_);
}

void DenseLayer::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != in_ || out.size() != out_) {
    throw StructuralError(weight.name + ": apply() shape mismatch");
  }
  const double* w = weight.value.data.data();
  for (std::size_t i = 0; i < out_; ++i) {
    out[i] = nn::activate(act_, row_affine(w + i * in_, x.data(), in_, bias.value.data[i]));
  }
}

std::vector<double> DenseLayer::apply(std::span<const double> x) const {
  std::vector<double> out(out_);
  apply(x, out);
  return out;
}

GruCell::GruCell(const std::string& name, std::size_t input, std::size_t hidden)
    : input_(input), hidden_(hidden) {
  auto make = [&](const std::string& gate) {
    return Gate{{name + "." + gate + ".w_input", Tensor({hidden, input})},
                {name + "." + gate + ".w_hidden", Tensor({hidden, hidden})},
                {name + "." + gate + ".bias", Tensor({hidden})}};
  };
  update = make("update");
  reset = make("reset");
  candidate = make("candidate");
}

void GruCell::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_ + hidden_));
  for (Gate* g : {&update, &reset, &candidate}) {
    fill_uniform(g->w_input.value, bound, rng);
    fill_uniform(g->w_hidden.value, bound, rng);
    std::fill(g->bias.value.data.begin(), g->bias.value.data.end(), 0.0);
  }
}

std::vector<Parameter*> GruCell::parameters() {
  std::vector<Parameter*> out;
  for (Gate* g : {&update, &reset, &candidate}) {
    out.push_back(&g->w_input);
    out.push_back(&g->w_hidden);
    out.push_back(&g->bias);
  }
  return out;
}

std::vector<const Parameter*> GruCell::parameters() const {
  std::vector<const Parameter*> out;
  for (const Gate* g : {&update, &reset, &candidate}) {
    out.push_back(&g->w_input);
    out.push_back(&g->w_hidden);
    out.push_back(&g->bias);
  }
  return out;
}

Var GruCell::forward(Tape& tape, Var h_prev, Var x) const {
  if (h_prev.size() != hidden_ || x.size() != input_) {
    throw StructuralError("gru: expected hidden " + std::to_string(hidden_) + " and input " +
                          std::to_string(input_) + ", got " + std::to_string(h_prev.size()) + " and " +
                          std::to_string(x.size()));
  }
  auto pre = [&](const Gate& g, Var h) {
    return add(affine(tape.param(g.w_input), x, tape.param(g.bias)), matvec(tape.param(g.w_hidden), h));
  };
  Var z = activate(pre(update, h_prev), Activation::Sigmoid);
  Var r = activate(pre(reset, h_prev), Activation::Sigmoid);
  Var c = activate(pre(candidate, mul(r, h_prev)), Activation::Tanh);
  // (1 − z)⊙h + z⊙c
  return add(mul(one_minus(z), h_prev), mul(z, c));
}

void GruCell::apply(std::span<const double> h_prev, std::span<const double> x, std::span<double> h_next) const {
  if (h_prev.size() != hidden_ || x.size() != input_ || h_next.size() != hidden_) {
    throw StructuralError("gru: apply() shape mismatch");
  }
  std::vector<double> z(hidden_), rh(hidden_);
  auto pre = [&](const Gate& g, std::size_t i, const double* h) {
    const double a = row_affine(g.w_input.value.data.data() + i * input_, x.data(), input_, g.bias.value.data[i]);
    const double b = row_affine(g.w_hidden.value.data.data() + i * hidden_, h, hidden_, 0.0);
    return a + b;
  };
  for (std::size_t i = 0; i < hidden_; ++i) {
    z[i] = sigmoid(pre(update, i, h_prev.data()));
    rh[i] = sigmoid(pre(reset, i, h_prev.data())) * h_prev[i];
  }
  for (std::size_t i = 0; i < hidden_; ++i) {
    const double c = tanh_act(pre(candidate, i, rh.data()));
    h_next[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c;
  }
}

}  // namespace aif::nn
