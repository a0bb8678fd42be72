#include "aif/nn/optim.hpp"

#include <cmath>

#include "aif/error.hpp"

namespace aif::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  first_.reserve(params_.size());
  second_.reserve(params_.size());
  for (const Parameter* p : params_) {
    first_.emplace_back(p->value.shape, 0.0);
    second_.emplace_back(p->value.shape, 0.0);
  }
}

void Adam::rebind(std::vector<Parameter*> params) {
  if (params.size() != params_.size()) throw StructuralError("Adam::rebind: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape != first_[i].shape) throw StructuralError("Adam::rebind: shape mismatch");
  }
  params_ = std::move(params);
}

void Adam::step(const Gradients& grads) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Parameter& p = *params_[pi];
    const Tensor* g = grads.find(p);
    Tensor& m = first_[pi];
    Tensor& v = second_[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = g ? g->data[i] : 0.0;
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double m_hat = m.data[i] / c1;
      const double v_hat = v.data[i] / c2;
      p.value.data[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

void sgd_step(std::span<Parameter* const> params, const Gradients& grads, double lr) {
  if (!(lr >= 0.0)) throw ArgumentError("sgd_step: learning rate must be non-negative");
  for (Parameter* p : params) {
    const Tensor* g = grads.find(*p);
    if (!g) continue;
    if (g->size() != p->value.size()) throw StructuralError("sgd_step: gradient shape mismatch for " + p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value.data[i] -= lr * g->data[i];
  }
}

}  // namespace aif::nn
