#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aif/nn/tape.hpp"

namespace aif::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are aligned with the parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  void step(const Gradients& grads);

  std::uint64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  /// Point the optimizer at an equally shaped parameter list (after the owner was copied).
  void rebind(std::vector<Parameter*> params);
  std::span<Parameter* const> parameters() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  AdamConfig cfg_;
  std::uint64_t steps_ = 0;
};

/// params ← params − lr·grads. Throws ArgumentError for lr < 0.
void sgd_step(std::span<Parameter* const> params, const Gradients& grads, double lr);

}  // namespace aif::nn
