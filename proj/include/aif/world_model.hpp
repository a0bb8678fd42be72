#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "aif/distributions.hpp"
#include "aif/nn/checkpoint.hpp"
#include "aif/nn/layers.hpp"
#include "aif/nn/optim.hpp"

namespace aif {

struct WorldModelConfig {
  std::size_t obs_dim = 2;
  std::size_t latent_dim = 2;
  std::size_t action_dim = 1;
  std::size_t hidden = 20;
  /// Planning window; the recurrent state has 2·horizon·latent_dim units.
  std::size_t horizon = 6;
  double decoder_std = 0.05;
  double vae_learning_rate = 1e-3;
  double transition_learning_rate = 1e-3;
  /// Added to every Softplus std head so beliefs never degenerate.
  double std_min = 1e-4;

  std::size_t recurrent_size() const { return 2 * horizon * latent_dim; }
  void validate() const;
};

/// q(x|y): SiLU hidden layer, identity mean head, Softplus std head.
struct Encoder {
  nn::DenseLayer hidden;
  nn::DenseLayer mean_head;
  nn::DenseLayer std_head;
  double std_min = 1e-4;

  DiagGaussian operator()(std::span<const double> y) const;
  GaussianVar forward(nn::Tape& tape, nn::Var y) const;
};

/// q(y|x): SiLU hidden layer, identity mean head, fixed std.
struct Decoder {
  nn::DenseLayer hidden;
  nn::DenseLayer mean_head;
  double fixed_std = 0.05;

  DiagGaussian operator()(std::span<const double> x) const;
  GaussianVar forward(nn::Tape& tape, nn::Var x) const;
};

/// GRU over concat(x, a), plus heads predicting the latent update and its std.
struct TransitionModel {
  nn::GruCell cell;
  nn::DenseLayer delta_head;
  nn::DenseLayer std_head;
  double std_min = 1e-4;

  struct Step {
    std::vector<double> h_next;
    DiagGaussian predicted;
  };
  struct TracedStep {
    nn::Var h_next;
    GaussianVar predicted;
  };

  Step operator()(std::span<const double> h_prev, std::span<const double> x, std::span<const double> a) const;
  TracedStep forward(nn::Tape& tape, nn::Var h_prev, nn::Var x, nn::Var a) const;
};

struct AgentBelief {
  DiagGaussian latent;
  std::vector<double> h;
  std::vector<double> last_action;
  /// False until the first observation of an episode has been perceived.
  bool has_history = false;
};

struct PerceptionMetrics {
  double vae_loss = 0.0;
  double transition_kl = 0.0;
  double vfe_capsule = 0.0;
  /// False on the first step of an episode: no prediction existed to score.
  bool has_prediction = false;
};

struct Perception {
  PerceptionMetrics metrics;
  DiagGaussian posterior;
  std::optional<DiagGaussian> predicted;
};

struct ImaginedStep {
  DiagGaussian predicted;   // q(x_{τ+1} | π)
  DiagGaussian decoded;     // q(y_{τ+1} | x_{τ+1}) at the predicted mean
  DiagGaussian reencoded;   // q(x_{τ+1} | y_{τ+1}) at the decoded mean
};

/// The unbiased generative model: VAE plus recurrent transition model, trained online.
class WorldModel {
 public:
  WorldModel(const WorldModelConfig& cfg, std::uint64_t seed);
  WorldModel(const WorldModel& other);
  WorldModel& operator=(const WorldModel& other);

  const WorldModelConfig& config() const { return cfg_; }

  DiagGaussian encode(std::span<const double> y) const;
  DiagGaussian decode(std::span<const double> x) const;
  TransitionModel::Step transition_step(std::span<const double> h_prev, std::span<const double> x,
                                        std::span<const double> a) const;

  /// −ln q(y | x̃) + KL(q(x|y) ‖ N(0, I)) with x̃ = mean + std⊙noise.
  double vae_loss(std::span<const double> y, std::span<const double> noise) const;
  static double transition_loss(const DiagGaussian& predicted, const DiagGaussian& posterior);
  /// Capsule free energy: −ln q(y | x̃) with x̃ drawn from `predicted`, plus KL(predicted ‖ posterior).
  double model_free_energy(const DiagGaussian& predicted, const DiagGaussian& posterior,
                           std::span<const double> y, std::span<const double> noise) const;

  AgentBelief initial_belief() const;

  /// Online inference-and-learning step on observation `y` reached by action `a_prev`.
  Perception perceive(AgentBelief& belief, std::span<const double> y, std::span<const double> a_prev,
                      std::mt19937_64& rng);

  /// Mean-propagated rollout of `actions` (row-major, steps × action_dim) from (h, x).
  std::vector<ImaginedStep> imagine(std::span<const double> h, std::span<const double> x,
                                    std::span<const double> actions) const;

  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const TransitionModel& transition() const { return transition_; }
  Encoder& encoder() { return encoder_; }
  Decoder& decoder() { return decoder_; }
  TransitionModel& transition() { return transition_; }

  std::vector<nn::Parameter*> vae_parameters();
  std::vector<nn::Parameter*> transition_parameters();
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  /// Gradients of vae_loss / transition_loss for the given inputs (used by perceive and tests).
  nn::Gradients vae_gradients(std::span<const double> y, std::span<const double> noise, double* loss = nullptr) const;
  nn::Gradients transition_gradients(std::span<const double> h_prev, std::span<const double> x,
                                     std::span<const double> a, const DiagGaussian& posterior,
                                     double* loss = nullptr) const;

  void save(nn::Checkpoint& ck) const;
  void load(const nn::Checkpoint& ck);

 private:
  void bind_optimizers();

  WorldModelConfig cfg_;
  Encoder encoder_;
  Decoder decoder_;
  TransitionModel transition_;
  nn::Adam vae_opt_;
  nn::Adam transition_opt_;
};

}  // namespace aif
