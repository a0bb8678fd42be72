#pragma once

#include <random>
#include <span>
#include <variant>
#include <vector>

#include "aif/distributions.hpp"
#include "aif/nn/checkpoint.hpp"
#include "aif/nn/layers.hpp"

namespace aif {

/// Fixed Gaussian preference over observations.
struct GivenPrior {
  DiagGaussian preference;
};

/// U(y) ∈ (−1, 1): SiLU hidden layer, Tanh output.
class UtilityModel {
 public:
  UtilityModel(std::size_t obs_dim, std::size_t hidden, std::uint64_t seed);

  double operator()(std::span<const double> y) const;
  nn::Var forward(nn::Tape& tape, nn::Var y) const;

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  const nn::DenseLayer& hidden() const { return hidden_; }
  const nn::DenseLayer& output() const { return output_; }
  nn::DenseLayer& hidden() { return hidden_; }
  nn::DenseLayer& output() { return output_; }

  void save(nn::Checkpoint& ck) const { ck.add(parameters()); }
  void load(const nn::Checkpoint& ck) { ck.restore(parameters()); }

 private:
  nn::DenseLayer hidden_;
  nn::DenseLayer output_;
};

using PriorModel = std::variant<GivenPrior, UtilityModel>;

struct UtilityLearnerConfig {
  double discount = 0.995;
  double learning_rate = 0.1;
  int iterations = 15;

  void validate() const;
};

/// Extrinsic cost of a predicted observation distribution:
/// KL(decoded ‖ preference) for a given prior, 1 − U(decoded.mean) for a learned one.
double extrinsic_value(const DiagGaussian& decoded, const PriorModel& prior);

/// Bootstrapped utility targets for one iteration of the learner:
///   û_t = r_t,   û_τ = r_τ + discount^{t−τ}·U(y_{τ+1}) for τ < t.
std::vector<double> utility_targets(std::span<const std::vector<double>> observations,
                                    std::span<const double> rewards, const UtilityModel& model, double discount);

/// Mean squared error between U(y_τ) and fixed targets, with its parameter gradients.
nn::Gradients utility_loss_gradients(std::span<const std::vector<double>> observations,
                                     std::span<const double> targets, const UtilityModel& model,
                                     double* loss = nullptr);

/// Fits U to rewards along the trajectory observed so far. Each of the
/// `iterations` rounds recomputes targets from the current U, then takes one
/// SGD step with rate learning_rate·|r_t| (r_t is the latest reward).
void learn_utility(std::span<const std::vector<double>> observations, std::span<const double> rewards,
                   UtilityModel& model, const UtilityLearnerConfig& cfg);

/// Environment reward mapped into [−1, 1].
double clamp_reward(double raw);

}  // namespace aif
