#include "aif/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aif/error.hpp"
#include "aif/nn/optim.hpp"

namespace aif {

UtilityModel::UtilityModel(std::size_t obs_dim, std::size_t hidden, std::uint64_t seed)
    : hidden_("utility.hidden", obs_dim, hidden, nn::Activation::SiLU),
      output_("utility.output", hidden, 1, nn::Activation::Tanh) {
  std::mt19937_64 rng(seed);
  hidden_.init_uniform(rng);
  output_.init_uniform(rng);
}

double UtilityModel::operator()(std::span<const double> y) const {
  double u = 0.0;
  output_.apply(hidden_.apply(y), std::span<double>(&u, 1));
  return u;
}

nn::Var UtilityModel::forward(nn::Tape& tape, nn::Var y) const {
  return output_.forward(tape, hidden_.forward(tape, y));
}

std::vector<nn::Parameter*> UtilityModel::parameters() {
  return {&hidden_.weight, &hidden_.bias, &output_.weight, &output_.bias};
}

std::vector<const nn::Parameter*> UtilityModel::parameters() const {
  return {&hidden_.weight, &hidden_.bias, &output_.weight, &output_.bias};
}

void UtilityLearnerConfig::validate() const {
  if (!(discount > 0.0 && discount < 1.0)) throw ArgumentError("discount must lie in (0, 1)");
  if (!(learning_rate >= 0.0)) throw ArgumentError("utility learning rate must be non-negative");
  if (iterations < 1) throw ArgumentError("utility iterations must be >= 1");
}

double extrinsic_value(const DiagGaussian& decoded, const PriorModel& prior) {
  if (const auto* given = std::get_if<GivenPrior>(&prior)) return kl_divergence(decoded, given->preference);
  return 1.0 - std::get<UtilityModel>(prior)(decoded.mean);
}

namespace {

void check_sequences(std::span<const std::vector<double>> observations, std::span<const double> rewards) {
  if (observations.empty()) throw ArgumentError("learn_utility: empty trajectory");
  if (observations.size() != rewards.size()) {
    throw ArgumentError("learn_utility: observations and rewards differ in length");
  }
  for (double r : rewards) {
    if (!(r >= -1.0 && r <= 1.0)) throw ArgumentError("learn_utility: reward outside [-1, 1]: " + std::to_string(r));
  }
}

}  // namespace

std::vector<double> utility_targets(std::span<const std::vector<double>> observations,
                                    std::span<const double> rewards, const UtilityModel& model, double discount) {
  check_sequences(observations, rewards);
  const std::size_t t = observations.size() - 1;
  std::vector<double> targets(observations.size());
  targets[t] = rewards[t];
  for (std::size_t tau = 0; tau < t; ++tau) {
    const double weight = std::pow(discount, static_cast<double>(t - tau));
    targets[tau] = rewards[tau] + weight * model(observations[tau + 1]);
  }
  return targets;
}

nn::Gradients utility_loss_gradients(std::span<const std::vector<double>> observations,
                                     std::span<const double> targets, const UtilityModel& model, double* loss) {
  if (observations.size() != targets.size() || observations.empty()) {
    throw ArgumentError("utility loss: observations and targets must be non-empty and equal length");
  }
  nn::Tape tape;
  nn::Var total = tape.scalar(0.0);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    nn::Var u = model.forward(tape, tape.constant(observations[i]));
    total = nn::add(total, nn::square(nn::add_scalar(u, -targets[i])));
  }
  nn::Var mse = nn::scale(total, 1.0 / static_cast<double>(observations.size()));
  if (loss) *loss = mse.item();
  return tape.backward(mse);
}

void learn_utility(std::span<const std::vector<double>> observations, std::span<const double> rewards,
                   UtilityModel& model, const UtilityLearnerConfig& cfg) {
  cfg.validate();
  check_sequences(observations, rewards);
  const double rate = cfg.learning_rate * std::fabs(rewards.back());
  if (rate == 0.0) return;  // reward-gated: every update would be zero
  const auto params = model.parameters();
  for (int i = 0; i < cfg.iterations; ++i) {
    const std::vector<double> targets = utility_targets(observations, rewards, model, cfg.discount);
    const nn::Gradients grads = utility_loss_gradients(observations, targets, model);
    nn::sgd_step(params, grads, rate);
  }
}

double clamp_reward(double raw) {
  if (std::isnan(raw)) return 0.0;
  return std::clamp(raw, -1.0, 1.0);
}

}  // namespace aif
